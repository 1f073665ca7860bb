#pragma once

// Shared test helpers: brute-force oracles for the generative model, finite
// differences, planted vote matrices, and small dataset builders. Everything
// here is independent of the library code paths it checks.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "vrlabel/dataset.hpp"
#include "vrlabel/heuristics.hpp"
#include "vrlabel/rng.hpp"

namespace testutil {

// Enumerates every (lambda, y) state: Z = sum exp(phi . lambda * y).
inline double oracle_log_partition(std::span<const double> phi) {
  const std::size_t J = phi.size();
  std::size_t states = 1;
  for (std::size_t j = 0; j < J; ++j) states *= 3;
  double z = 0.0;
  for (std::size_t code = 0; code < states; ++code) {
    std::size_t c = code;
    double dot = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const int lambda = static_cast<int>(c % 3) - 1;  // {-1, 0, +1}
      c /= 3;
      dot += phi[j] * lambda;
    }
    z += std::exp(dot) + std::exp(-dot);  // y = +1 and y = -1
  }
  return std::log(z);
}

// P(column) with y marginalized, by enumeration.
inline double oracle_column_log_prob(std::span<const double> phi,
                                     std::span<const std::int8_t> column) {
  double dot = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) dot += phi[j] * column[j];
  return std::log(std::exp(dot) + std::exp(-dot)) - oracle_log_partition(phi);
}

inline double oracle_marginal_log_likelihood(std::span<const double> phi,
                                             const vrlabel::LabelMatrix& lm) {
  double total = 0.0;
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    const auto column = lm.column(i);
    total += oracle_column_log_prob(phi, column);
  }
  return total;
}

inline double oracle_posterior(std::span<const double> phi,
                               std::span<const std::int8_t> column) {
  double dot = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) dot += phi[j] * column[j];
  const double up = std::exp(dot);
  const double down = std::exp(-dot);
  return up / (up + down);
}

// Central finite differences of a scalar function.
template <typename Fn>
std::vector<double> finite_difference(Fn&& f, std::vector<double> x,
                                      double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline vrlabel::LabelMatrix make_matrix(std::size_t predicate,
                                        std::vector<std::vector<int>> rows) {
  vrlabel::LabelMatrix lm;
  lm.predicate = predicate;
  lm.num_heuristics = rows.size();
  lm.num_pairs = rows.empty() ? 0 : rows[0].size();
  lm.entries.resize(lm.num_heuristics * lm.num_pairs);
  for (std::size_t j = 0; j < lm.num_heuristics; ++j) {
    for (std::size_t i = 0; i < lm.num_pairs; ++i) {
      lm.at(j, i) = static_cast<std::int8_t>(rows[j][i]);
    }
  }
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    lm.pair_ids.push_back("pair_" + std::to_string(i));
  }
  return lm;
}

inline vrlabel::LabelMatrix random_matrix(vrlabel::Rng& rng, std::size_t J,
                                          std::size_t N,
                                          std::size_t predicate = 0) {
  std::vector<std::vector<int>> rows(J, std::vector<int>(N));
  for (auto& row : rows) {
    for (int& v : row) v = static_cast<int>(rng.next_below(3)) - 1;
  }
  return make_matrix(predicate, std::move(rows));
}

inline std::vector<double> random_phi(vrlabel::Rng& rng, std::size_t J,
                                      double bound = 3.0) {
  std::vector<double> phi(J);
  for (double& p : phi) p = bound * (2.0 * rng.next_double() - 1.0);
  return phi;
}

// Votes from heuristics with planted accuracies: each heuristic abstains with
// abstain_rate, otherwise matches the true y with its accuracy. Returns the
// matrix and the planted truth.
struct PlantedVotes {
  vrlabel::LabelMatrix matrix;
  std::vector<int> truth;
};

inline PlantedVotes plant_votes(vrlabel::Rng& rng,
                                std::span<const double> accuracies,
                                double abstain_rate, std::size_t N) {
  std::vector<std::vector<int>> rows(accuracies.size(), std::vector<int>(N));
  std::vector<int> truth(N);
  for (std::size_t i = 0; i < N; ++i) {
    truth[i] = rng.next_double() < 0.5 ? 1 : -1;
    for (std::size_t j = 0; j < accuracies.size(); ++j) {
      if (rng.next_double() < abstain_rate) {
        rows[j][i] = 0;
      } else if (rng.next_double() < accuracies[j]) {
        rows[j][i] = truth[i];
      } else {
        rows[j][i] = -truth[i];
      }
    }
  }
  PlantedVotes out;
  out.matrix = make_matrix(0, std::move(rows));
  out.truth = std::move(truth);
  return out;
}

inline vrlabel::BoundingBox random_box(vrlabel::Rng& rng) {
  return vrlabel::BoundingBox{rng.next_double() * 500.0,
                              rng.next_double() * 500.0,
                              1.0 + rng.next_double() * 200.0,
                              1.0 + rng.next_double() * 200.0};
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("vrlabel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
