#include "lest/binary_io.hpp"

#include <fstream>

#include "lest/errors.hpp"

namespace lest {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file for reading: " + path.string());
    }
    std::vector<unsigned char> bytes(std::istreambuf_iterator<char>(in), {});
    if (in.bad()) {
        throw Error("read failed: " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open file for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

std::vector<unsigned char> matrix_to_f32le(const Matrix& m) {
    std::vector<unsigned char> bytes(m.rows() * m.cols() * 4);
    const double* src = m.data();
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
        store_le_f32(bytes.data() + 4 * i, static_cast<float>(src[i]));
    }
    return bytes;
}

void write_matrix_f32le(const std::filesystem::path& path, const Matrix& m) {
    write_file_bytes(path, matrix_to_f32le(m));
}

} // namespace lest
