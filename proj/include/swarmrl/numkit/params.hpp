#pragma once

#include <span>
#include <string>
#include <vector>

#include "swarmrl/numkit/types.hpp"

namespace swarmrl::numkit {

struct ParamBlock {
  std::string name;
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;

  Index size() const { return rows * cols; }
};

/// Offset table describing how named matrices are packed into one flat
/// parameter vector. Blocks are stored row-major, back to back, in the order
/// they were added.
class ParamLayout {
 public:
  Index add(std::string name, Index rows, Index cols) {
    require_shape(rows >= 0 && cols >= 0, "ParamLayout::add: negative extent for " + name);
    blocks_.push_back(ParamBlock{std::move(name), total_, rows, cols});
    total_ += rows * cols;
    return static_cast<Index>(blocks_.size()) - 1;
  }

  /// Appends every block of `other`, prefixing names, and returns the offset
  /// at which `other` starts.
  Index append(const ParamLayout& other, const std::string& prefix) {
    const Index start = total_;
    for (const auto& b : other.blocks_) add(prefix + b.name, b.rows, b.cols);
    return start;
  }

  Index size() const { return total_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(Index i) const { return blocks_.at(static_cast<std::size_t>(i)); }

  Eigen::Map<const Matrix> view(const Vector& flat, Index i) const {
    check(flat);
    const auto& b = block(i);
    return {flat.data() + b.offset, b.rows, b.cols};
  }

  Eigen::Map<Matrix> view(Vector& flat, Index i) const {
    check(flat);
    const auto& b = block(i);
    return {flat.data() + b.offset, b.rows, b.cols};
  }

  Vector flatten(std::span<const Matrix> parts) const {
    require_shape(parts.size() == blocks_.size(), "flatten: expected " + std::to_string(blocks_.size()) +
                                                      " blocks, got " + std::to_string(parts.size()));
    Vector flat(total_);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& b = blocks_[i];
      require_shape(parts[i].rows() == b.rows && parts[i].cols() == b.cols, "flatten: block " + b.name + " shape");
      std::copy(parts[i].data(), parts[i].data() + b.size(), flat.data() + b.offset);
    }
    return flat;
  }

  std::vector<Matrix> unflatten(const Vector& flat) const {
    check(flat);
    std::vector<Matrix> parts;
    parts.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      Matrix m(b.rows, b.cols);
      std::copy(flat.data() + b.offset, flat.data() + b.offset + b.size(), m.data());
      parts.push_back(std::move(m));
    }
    return parts;
  }

  bool operator==(const ParamLayout& other) const {
    if (total_ != other.total_ || blocks_.size() != other.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& a = blocks_[i];
      const auto& b = other.blocks_[i];
      if (a.name != b.name || a.offset != b.offset || a.rows != b.rows || a.cols != b.cols) return false;
    }
    return true;
  }

 private:
  void check(const Vector& flat) const {
    require_shape(flat.size() == total_, "flat parameter length " + std::to_string(flat.size()) +
                                             " does not match layout size " + std::to_string(total_));
  }

  std::vector<ParamBlock> blocks_;
  Index total_ = 0;
};

}  // namespace swarmrl::numkit
