#pragma once

#include <cmath>
#include <cstddef>

namespace pena {

// Neumaier compensated summation. Keeps cumulative sums of ~1e6 terms at
// roughly 1e-15 relative accuracy independent of term ordering magnitude.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double init) : sum_(init) {}

  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }

  // Merges another compensated sum; associative enough for deterministic
  // chunked reductions as long as the merge order is fixed.
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace pena
