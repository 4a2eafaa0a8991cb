#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/trajectory.hpp"

namespace invlqr::cli {

// Malformed or invariant-violating user input; maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  Matrix A;
  Matrix B;
  std::optional<Matrix> Q;
  std::optional<Matrix> F;
  double T = 1.0;
  int N = 1000;
  std::optional<Vector> x0;
};

ProblemFile parse_problem(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

// CSV header "t,k_11,...,k_1n,...,k_mn", one row per sample.
std::string format_trajectory_csv(const FeedbackTrajectory& K);
FeedbackTrajectory parse_trajectory_csv(const std::string& text, int n, int m);

// 64-bit FNV-1a over the bytes, rendered "fnv1a64:<16 hex digits>".
std::string digest(const std::string& bytes);

}  // namespace invlqr::cli
