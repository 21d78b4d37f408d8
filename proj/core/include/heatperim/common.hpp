#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatperim {

/// Point index into a MetricMeasureSpace. Matches Eigen's sparse storage index.
using Index = int;

/// Sorted, duplicate-free list of point indices.
using IndexSet = std::vector<Index>;

/// Real function on the points of a space.
using Vector = Eigen::VectorXd;

enum class ErrorKind {
    Precondition,   // caller violated a documented precondition
    Config,         // malformed configuration or serialized input
    Numerical,      // a numerical routine failed to converge or to certify
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::Precondition, what);
}

/// Sorts and deduplicates in place, returning the normalized set.
IndexSet normalized(IndexSet set);

/// Indicator vector of `set` over `n` points.
Vector indicator(const IndexSet& set, Index n);

/// Points of {0..n-1} not in `set`.
IndexSet complementOf(const IndexSet& set, Index n);

/// Membership mask for `set` over `n` points.
std::vector<char> membershipMask(const IndexSet& set, Index n);

/// Number of workers to use when the caller passes 0: HEATPERIM_WORKERS, else hardware concurrency.
unsigned defaultWorkers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is visited exactly once;
/// body must only write to state owned by index i.
void parallelFor(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace heatperim
