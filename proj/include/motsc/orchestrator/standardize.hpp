#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>

namespace motsc::orchestrator {

// Running z-score via Welford's algorithm. Used for programmatic rewards
// (proxy and Linear-baseline terms) so their magnitudes match the clamped
// standardized rewards the reward model produces.
class OnlineStandardizer {
 public:
  static constexpr double kClamp = 10.0;
  static constexpr double kStdFloor = 1e-8;

  // Folds x into the running statistics and returns its z-score under them.
  double push(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
    const double sd = stdev();
    if (sd < kStdFloor) return 0.0;
    const double z = (x - mean_) / sd;
    return z > kClamp ? kClamp : (z < -kClamp ? -kClamp : z);
  }

  int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double stdev() const {
    return count_ < 1 ? 0.0 : std::sqrt(m2_ / static_cast<double>(count_));
  }

  void save(std::ostream& os) const {
    os.write(reinterpret_cast<const char*>(&count_), sizeof(count_));
    os.write(reinterpret_cast<const char*>(&mean_), sizeof(mean_));
    os.write(reinterpret_cast<const char*>(&m2_), sizeof(m2_));
  }
  void load(std::istream& is) {
    is.read(reinterpret_cast<char*>(&count_), sizeof(count_));
    is.read(reinterpret_cast<char*>(&mean_), sizeof(mean_));
    is.read(reinterpret_cast<char*>(&m2_), sizeof(m2_));
  }

  bool operator==(const OnlineStandardizer&) const = default;

 private:
  int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace motsc::orchestrator
