#include "io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace invlqr::cli {

namespace {

using nlohmann::json;

Matrix matrix_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.empty() || !v.front().is_array()) {
    throw InputError(std::string("problem: '") + key + "' must be a non-empty 2-D array");
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v.front().size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError(std::string("problem: '") + key + "' has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw InputError(std::string("problem: '") + key + "' has a non-numeric entry");
      M(i, c) = x.get<double>();
    }
  }
  return M;
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("problem: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("problem: top level must be an object");
  if (!j.contains("A") || !j.contains("B")) throw InputError("problem: keys 'A' and 'B' are required");
  ProblemFile p;
  p.A = matrix_field(j, "A");
  p.B = matrix_field(j, "B");
  const Eigen::Index n = p.A.rows();
  if (p.A.cols() != n) throw InputError("problem: A must be square");
  if (p.B.rows() != n) throw InputError("problem: B must have as many rows as A");
  auto square = [&](const char* key) {
    Matrix M = matrix_field(j, key);
    if (M.rows() != n || M.cols() != n) throw InputError(std::string("problem: '") + key + "' must be n x n");
    return M;
  };
  if (j.contains("Q")) p.Q = square("Q");
  if (j.contains("F")) p.F = square("F");
  if (j.contains("T")) {
    if (!j["T"].is_number()) throw InputError("problem: 'T' must be a number");
    p.T = j["T"].get<double>();
  }
  if (j.contains("N")) {
    if (!j["N"].is_number_integer()) throw InputError("problem: 'N' must be an integer");
    p.N = j["N"].get<int>();
  }
  if (j.contains("x0")) {
    const json& x = j["x0"];
    if (!x.is_array() || static_cast<Eigen::Index>(x.size()) != n) {
      throw InputError("problem: 'x0' must be an array of length n");
    }
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = x[static_cast<std::size_t>(i)].get<double>();
    p.x0 = v;
  }
  if (!(p.T > 0.0) || !std::isfinite(p.T)) throw InputError("problem: T must be positive");
  if (p.N < 2) throw InputError("problem: N must be at least 2");
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

std::string format_trajectory_csv(const FeedbackTrajectory& K) {
  const int n = K.n();
  const int m = K.m();
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) os << ",k_" << i + 1 << j + 1;
  }
  os << "\n" << std::setprecision(12);
  for (int s = 0; s < K.grid.size(); ++s) {
    os << K.grid.time(s);
    const Matrix& k = K.K[static_cast<std::size_t>(s)];
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) os << "," << k(i, j);
    }
    os << "\n";
  }
  return os.str();
}

FeedbackTrajectory parse_trajectory_csv(const std::string& text, int n, int m) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  const std::size_t cols = static_cast<std::size_t>(m) * n + 1;
  if (header.size() != cols || header.front() != "t") {
    throw InputError("trajectory: header must be t followed by " + std::to_string(m * n) +
                     " gain columns");
  }
  std::vector<double> t;
  std::vector<Matrix> K;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("trajectory: line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() != cols) {
      throw InputError("trajectory: line " + std::to_string(lineno) + " has " +
                       std::to_string(vals.size()) + " fields, expected " + std::to_string(cols));
    }
    t.push_back(vals[0]);
    Matrix k(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) k(i, j) = vals[1 + static_cast<std::size_t>(i) * n + j];
    }
    K.push_back(k);
  }
  if (t.size() < 3) throw InputError("trajectory: need at least 3 samples");
  const int N = static_cast<int>(t.size()) - 1;
  const double T = t.back() - t.front();
  if (std::abs(t.front()) > 1e-12 * (1.0 + std::abs(T))) throw InputError("trajectory: first time must be 0");
  if (!(T > 0.0)) throw InputError("trajectory: times must increase");
  const double h = T / N;
  for (int i = 0; i <= N; ++i) {
    if (i > 0 && !(t[static_cast<std::size_t>(i)] > t[static_cast<std::size_t>(i - 1)])) {
      throw InputError("trajectory: times must be strictly increasing");
    }
    if (std::abs(t[static_cast<std::size_t>(i)] - i * h) > 1e-9 * T) {
      throw InputError("trajectory: times must be uniformly spaced");
    }
  }
  FeedbackTrajectory out{TimeGrid(T, N), std::move(K)};
  return out;
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace invlqr::cli
