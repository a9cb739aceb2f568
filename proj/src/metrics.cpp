#include "lest/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lest/errors.hpp"

namespace lest {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::uint32_t ignore_label)
    : n_classes_(n_classes), ignore_(ignore_label), counts_(n_classes * n_classes, 0) {
    if (n_classes == 0) {
        throw ContractError("ConfusionMatrix: need at least one class");
    }
}

void ConfusionMatrix::accumulate(std::span<const std::uint32_t> truth,
                                 std::span<const std::uint32_t> pred) {
    if (truth.size() != pred.size()) {
        throw ContractError("ConfusionMatrix::accumulate: length mismatch (" +
                            std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) +
                            ")");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::uint32_t t = truth[i];
        const std::uint32_t p = pred[i];
        if (t != ignore_ && t >= n_classes_) {
            throw ContractError("ConfusionMatrix: truth id " + std::to_string(t) +
                                " out of range at index " + std::to_string(i));
        }
        if (p != ignore_ && p >= n_classes_) {
            throw ContractError("ConfusionMatrix: prediction id " + std::to_string(p) +
                                " out of range at index " + std::to_string(i));
        }
        if (t == ignore_ || p == ignore_) {
            ++n_ignored_;
            continue;
        }
        ++counts_[t * n_classes_ + p];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.n_classes_ != n_classes_ || other.ignore_ != ignore_) {
        throw ContractError("ConfusionMatrix::merge: incompatible matrices");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    n_ignored_ += other.n_ignored_;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts_) {
        sum += c;
    }
    return sum;
}

IouResult miou(const ConfusionMatrix& cm) {
    const std::size_t k = cm.n_classes();
    IouResult result;
    result.per_class.assign(k, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t tp = cm.count(i, i);
        std::uint64_t fp = 0, fn = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j != i) {
                fp += cm.count(j, i);
                fn += cm.count(i, j);
            }
        }
        const std::uint64_t denom = tp + fp + fn;
        if (denom == 0) {
            continue; // class absent from truth and prediction
        }
        result.per_class[i] = static_cast<double>(tp) / static_cast<double>(denom);
        sum += result.per_class[i];
        ++defined;
    }
    if (defined == 0) {
        throw NumericalError("miou: undefined, every class has an empty denominator");
    }
    result.mean = sum / static_cast<double>(defined);
    return result;
}

} // namespace lest
