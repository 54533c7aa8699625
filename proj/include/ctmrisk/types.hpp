#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ctmrisk {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// A model file that cannot be read or does not match the schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structurally valid request that the library refuses to serve:
// out-of-range risk parameters, unsupported mapping/operation combinations,
// inconsistent solver settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finite state space identified by distinct labels. Indices are positions in
// the label list and are what every other type works with; labels only
// resurface in file IO.
class StateSpace {
 public:
  StateSpace() = default;

  explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw std::invalid_argument("state space: no states");
    for (Index i = 0; i < size(); ++i) {
      auto [it, inserted] = index_.emplace(labels_[static_cast<std::size_t>(i)], i);
      if (!inserted)
        throw std::invalid_argument("state space: duplicate label '" + labels_[static_cast<std::size_t>(i)] + "'");
    }
  }

  // Unlabeled space "0", "1", ..., n-1.
  static StateSpace numbered(Index n) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return StateSpace(std::move(labels));
  }

  Index size() const { return static_cast<Index>(labels_.size()); }

  const std::string& label(Index i) const { return labels_.at(static_cast<std::size_t>(i)); }

  const std::vector<std::string>& labels() const { return labels_; }

  // -1 when the label is unknown.
  Index index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    return it == index_.end() ? Index(-1) : it->second;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
};

}  // namespace ctmrisk
