#include "lest/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include "lest/attention.hpp"
#include "lest/errors.hpp"
#include "lest/rng.hpp"

namespace lest {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, const char* name) {
    Matrix m(rows, cols);
    SplitMix64 rng(named_seed(seed, name));
    fill_uniform(m, rng, -1.0, 1.0);
    return m;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::ostream& csv_num(std::ostream& os, double v) {
    os << std::setprecision(15) << v;
    return os;
}

} // namespace

double time_grouped_attention(const GroupAssignment& ga, std::size_t n_voxels, std::size_t dim,
                              std::uint64_t seed, int workers) {
    const Matrix x = random_matrix(n_voxels, dim, seed, "bench.grouped.features");
    const auto t0 = clock_type::now();
    parallel_for(ga.n_groups, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            const std::size_t size = ga.group_begin[g + 1] - ga.group_begin[g];
            if (size == 0) {
                continue;
            }
            Matrix slice(size, dim);
            for (std::size_t t = 0; t < size; ++t) {
                const double* src = x.data() + ga.perm[ga.group_begin[g] + t] * dim;
                double* dst = slice.data() + t * dim;
                for (std::size_t c = 0; c < dim; ++c) {
                    dst[c] = src[c];
                }
            }
            Matrix out = softmax_attention(slice, slice, slice, 1);
            (void)out;
        }
    });
    return seconds_since(t0);
}

std::string bench_grouping_csv(const GroupingBenchParams& params) {
    params.grid.validate();
    std::ostringstream csv;
    csv << "grouper,seed,n_points,n_voxels,G,mean,var,max,seq_cost,padded_cost,"
           "model_padded_attn_cost,attn_seconds\n";

    for (const std::uint64_t seed : params.seeds) {
        const PointCloud cloud = generate_synthetic_scene(seed, params.n_points, params.profile);
        const VoxelSet voxels = assign_voxels(cloud, params.grid);
        if (voxels.size() == 0) {
            throw ContractError("bench_grouping: scene produced no voxels");
        }
        const std::size_t sfc_groups =
            (voxels.size() + params.sfc_capacity - 1) / params.sfc_capacity;

        for (const std::string& grouper : params.groupers) {
            GroupAssignment ga;
            if (grouper == "sfc") {
                ga = sfc_group(voxels, params.sfc_capacity, params.shift);
            } else if (grouper == "window") {
                auto window = params.window;
                if (window[0] == 0 && window[1] == 0 && window[2] == 0) {
                    window = choose_window_for_group_count(voxels, sfc_groups);
                }
                ga = window_group(voxels, window);
            } else if (grouper == "kmeans") {
                const std::size_t g =
                    params.kmeans_groups > 0 ? params.kmeans_groups : sfc_groups;
                ga = kmeans_group(voxels, std::min(g, voxels.size()), seed,
                                  params.kmeans_max_iter);
            } else {
                throw ContractError("bench_grouping: unknown grouper '" + grouper + "'");
            }

            const GroupStats st = group_stats(ga);
            const double model_cost =
                st.padded_cost * static_cast<double>(params.attn_dim);
            double attn_seconds = 0.0;
            if (params.measure_attention) {
                attn_seconds =
                    time_grouped_attention(ga, voxels.size(), params.attn_dim, seed, params.workers);
            }
            csv << grouper << ',' << seed << ',' << params.n_points << ',' << voxels.size() << ','
                << ga.n_groups << ',';
            csv_num(csv, st.mean) << ',';
            csv_num(csv, st.variance) << ',' << st.max_size << ',';
            csv_num(csv, st.seq_cost) << ',';
            csv_num(csv, st.padded_cost) << ',';
            csv_num(csv, model_cost) << ',';
            csv_num(csv, attn_seconds) << '\n';
        }
    }
    return csv.str();
}

double time_attention_variant(const std::string& variant, std::size_t n, std::size_t dim,
                              std::uint64_t seed, int reps, int workers) {
    const Matrix q = random_matrix(n, dim, seed, "bench.scaling.q");
    const Matrix k = random_matrix(n, dim, seed, "bench.scaling.k");
    const Matrix v = random_matrix(n, dim, seed, "bench.scaling.v");

    auto run_once = [&]() {
        if (variant == "disco_oracle") {
            // quadratic route: generic pairwise oracle over the trig feature
            // maps, whose dot product is exactly the DISCO similarity
            const Matrix qf = disco_trig_features(q);
            const Matrix kf = disco_trig_features(k);
            Matrix out = similarity_attention_oracle(
                qf, kf, v,
                [](std::span<const double> a, std::span<const double> b) {
                    double dot = 0.0;
                    for (std::size_t p = 0; p < a.size(); ++p) {
                        dot += a[p] * b[p];
                    }
                    return dot;
                },
                workers);
            (void)out;
        } else {
            Matrix out =
                run_attention_variant(attention_variant_from_string(variant), q, k, v, workers);
            (void)out;
        }
    };

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(std::max(1, reps)));
    for (int r = 0; r < std::max(1, reps); ++r) {
        const auto t0 = clock_type::now();
        run_once();
        times.push_back(seconds_since(t0));
    }
    return median(std::move(times));
}

std::string bench_attention_scaling_csv(const ScalingBenchParams& params) {
    if (!std::is_sorted(params.n_values.begin(), params.n_values.end())) {
        throw ContractError("bench_attention_scaling: N values must be ascending");
    }
    std::ostringstream csv;
    csv << "variant,N,D,seconds,ratio\n";
    for (const std::string& variant : params.variants) {
        double prev = 0.0;
        for (std::size_t idx = 0; idx < params.n_values.size(); ++idx) {
            const std::size_t n = params.n_values[idx];
            const double t = time_attention_variant(variant, n, params.dim, params.seed,
                                                    params.reps, params.workers);
            csv << variant << ',' << n << ',' << params.dim << ',';
            csv_num(csv, t) << ',';
            if (idx > 0 && prev > 0.0) {
                csv_num(csv, t / prev);
            }
            csv << '\n';
            prev = t;
        }
    }
    return csv.str();
}

} // namespace lest
