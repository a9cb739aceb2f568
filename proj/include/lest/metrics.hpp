#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lest {

/// Per-class confusion counts; rows are ground truth, columns are prediction.
/// Pairs where either side carries the ignore label are skipped (and counted
/// separately), so the matrix total always equals the number of scored points.
class ConfusionMatrix {
public:
    static constexpr std::uint32_t kNoIgnore = 0xFFFFFFFFu;

    explicit ConfusionMatrix(std::size_t n_classes, std::uint32_t ignore_label = kNoIgnore);

    /// counts[t][p] += 1 for each scored pair. Ids must be < n_classes or equal
    /// to the ignore label; anything else throws ContractError with the index.
    void accumulate(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> pred);

    /// Shard-merge: integer addition commutes, so sharded accumulation followed
    /// by merges equals one big accumulation.
    void merge(const ConfusionMatrix& other);

    std::size_t n_classes() const { return n_classes_; }
    std::uint32_t ignore_label() const { return ignore_; }
    std::uint64_t count(std::size_t truth, std::size_t pred) const {
        return counts_[truth * n_classes_ + pred];
    }
    std::uint64_t total() const;
    std::uint64_t ignored() const { return n_ignored_; }

private:
    std::size_t n_classes_;
    std::uint32_t ignore_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t n_ignored_ = 0;
};

struct IouResult {
    std::vector<double> per_class; ///< NaN for classes absent from truth and prediction
    double mean = 0.0;             ///< mean over the defined classes
};

/// IoU_i = TP_i / (TP_i + FP_i + FN_i). Classes with a zero denominator are
/// excluded from the mean; if every class is excluded the metric is undefined
/// and a NumericalError is thrown.
IouResult miou(const ConfusionMatrix& cm);

} // namespace lest
