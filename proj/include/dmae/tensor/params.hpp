#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmae/errors.hpp"
#include "dmae/tensor/tensor.hpp"

namespace dmae::tensor {

// Ordered bundle of named trainable tensors. Insertion order is the
// serialization and optimizer order.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    bool decay;  // subject to decoupled weight decay
  };

  Tensor<T>& add(std::string name, Tensor<T> value, bool decay) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
    value.set_requires_grad(true);
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value), decay});
    return entries_.back().value;
  }

  const Tensor<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("unknown parameter: " + name);
    return entries_[it->second].value;
  }
  Tensor<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("unknown parameter: " + name);
    return entries_[it->second].value;
  }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.value.zero_grad();
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Deep copy into another precision; all copies require grad.
template <class To, class From>
ParamStore<To> cast_params(const ParamStore<From>& src) {
  ParamStore<To> out;
  for (const auto& e : src.entries()) out.add(e.name, cast<To>(e.value, true), e.decay);
  return out;
}

}  // namespace dmae::tensor
