#pragma once

#include <vector>

#include "invlqr/matkit.hpp"

namespace invlqr {

// Uniform grid t_i = i*T/N, i = 0..N.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double T, int N);

  double horizon() const { return T_; }
  int steps() const { return N_; }
  int size() const { return N_ + 1; }
  double step() const { return T_ / N_; }
  double time(int i) const { return i == N_ ? T_ : i * step(); }
  bool same_as(const TimeGrid& o) const;

 private:
  double T_ = 1.0;
  int N_ = 2;
};

// Sampled gain K(t_i), each m x n.
struct FeedbackTrajectory {
  TimeGrid grid;
  std::vector<Matrix> K;

  int n() const { return K.empty() ? 0 : static_cast<int>(K.front().cols()); }
  int m() const { return K.empty() ? 0 : static_cast<int>(K.front().rows()); }
  void validate(int n, int m) const;
};

}  // namespace invlqr
