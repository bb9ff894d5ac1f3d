#include "dinozaur/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dinozaur/errors.hpp"

namespace dinozaur::nn {

Parameter& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (entries_.count(name) != 0) throw ConfigError("ParamStore: duplicate parameter '" + name + "'");
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 1) throw ShapeError("ParamStore: non-positive extent in '" + name + "'");
    n *= static_cast<std::size_t>(s);
  }
  Parameter p;
  p.shape = std::move(shape);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  return entries_.emplace(name, std::move(p)).first->second;
}

void ParamStore::remove(const std::string& name) { entries_.erase(name); }

Parameter& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("ParamStore: no parameter named '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("ParamStore: no parameter named '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, p] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : entries_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

bool ParamStore::all_finite() const {
  for (const auto& [name, p] : entries_)
    for (double v : p.value)
      if (!std::isfinite(v)) return false;
  return true;
}

const Field& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Field value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const ParamStore& store, const std::string& name) {
  const Parameter& p = store.at(name);
  Node node;
  node.value = Field({}, static_cast<int>(p.size()), p.value);
  node.requires_grad = recording_;
  if (recording_) node.parameter = name;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Field value, std::initializer_list<Var> inputs, Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::push(Field value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording_) {
    for (const Var& v : inputs) {
      if (v.tape_ != this) throw ConfigError("Tape: input recorded on a different tape");
      if (nodes_[v.id_].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Field& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Field(node.value.extents(), node.value.channels());
  return node.grad;
}

void Tape::backward(const Var& loss, ParamStore& store, double seed) {
  if (loss.tape_ != this) throw ConfigError("Tape::backward: loss recorded on a different tape");
  const Field& lv = value(loss.id_);
  if (lv.size() != 1) throw ShapeError("Tape::backward: loss must be a scalar");
  if (!std::isfinite(lv[0])) {
    std::ostringstream os;
    os << "Tape::backward: non-finite loss " << lv[0];
    throw NumericError(os.str());
  }
  if (!recording_ || !nodes_[loss.id_].requires_grad) return;

  grad_buffer(loss.id_)[0] += seed;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (!node.parameter.empty()) {
      Parameter& p = store.at(node.parameter);
      const auto& g = node.grad.data();
      for (std::size_t k = 0; k < g.size(); ++k) p.grad[k] += g[k];
    }
  }
}

}  // namespace dinozaur::nn
