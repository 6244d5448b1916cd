#include "apw/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <unordered_set>

namespace apw {

namespace {

constexpr std::int64_t kKeyBits = 21;
constexpr std::int64_t kKeyOffset = std::int64_t{1} << (kKeyBits - 1);

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
}

}  // namespace

FreqIndex FreqIndex::of(std::initializer_list<int> comps) {
  if (comps.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("FreqIndex supports at most 3 components");
  }
  FreqIndex g;
  std::size_t i = 0;
  for (int v : comps) g.c[i++] = v;
  return g;
}

int FreqIndex::max_abs() const {
  return std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
}

std::int64_t FreqIndex::key() const {
  std::int64_t k = 0;
  for (int v : c) k = (k << kKeyBits) | (static_cast<std::int64_t>(v) + kKeyOffset);
  return k;
}

std::string FreqIndex::to_string(int dim) const {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(c[i]);
  }
  return s + ")";
}

bool canonical_less(const FreqIndex& a, const FreqIndex& b) {
  const int na = a.norm2(), nb = b.norm2();
  if (na != nb) return na < nb;
  return a.c < b.c;
}

FreqIndex pair_representative(const FreqIndex& g) {
  const FreqIndex m = -g;
  return canonical_less(m, g) ? m : g;
}

IndexSet::IndexSet(int dim) : IndexSet(dim, {}) {}

IndexSet::IndexSet(int dim, std::vector<FreqIndex> entries) : dim_(dim) {
  check_dim(dim);
  for (const auto& g : entries) {
    for (int i = dim; i < kMaxDim; ++i) {
      if (g.c[i] != 0) throw std::invalid_argument("frequency " + g.to_string(kMaxDim) + " exceeds dimension");
    }
    if (g.max_abs() >= kKeyOffset) throw std::invalid_argument("frequency component out of range");
  }
  std::sort(entries.begin(), entries.end(), canonical_less);
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  auto data = std::make_shared<Data>();
  data->position.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) data->position.emplace(entries[i].key(), i);
  data->entries = std::move(entries);
  data_ = std::move(data);
}

std::optional<std::size_t> IndexSet::find(const FreqIndex& g) const {
  const auto it = data_->position.find(g.key());
  if (it == data_->position.end()) return std::nullopt;
  return it->second;
}

int IndexSet::max_norm2() const {
  // canonical order puts the largest norm last
  return empty() ? 0 : data_->entries.back().norm2();
}

int IndexSet::max_abs_component() const {
  int m = 0;
  for (const auto& g : data_->entries) m = std::max(m, g.max_abs());
  return m;
}

bool operator==(const IndexSet& a, const IndexSet& b) {
  return a.dim_ == b.dim_ && (a.data_ == b.data_ || a.data_->entries == b.data_->entries);
}

IndexSet ball(int radius, int dim) {
  check_dim(dim);
  if (radius < 0) throw std::invalid_argument("ball radius must be nonnegative");
  const int r2 = radius * radius;
  const int ry = dim >= 2 ? radius : 0;
  const int rz = dim >= 3 ? radius : 0;
  std::vector<FreqIndex> pts;
  for (int x = -radius; x <= radius; ++x)
    for (int y = -ry; y <= ry; ++y)
      for (int z = -rz; z <= rz; ++z)
        if (x * x + y * y + z * z <= r2) pts.push_back({{x, y, z}});
  return IndexSet(dim, std::move(pts));
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("set_union: dimension mismatch");
  std::vector<FreqIndex> merged;
  merged.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged), canonical_less);
  return IndexSet(a.dim(), std::move(merged));
}

IndexSet complement_candidates(const IndexSet& s, const IndexSet& within) {
  if (s.dim() != within.dim()) throw std::invalid_argument("complement_candidates: dimension mismatch");
  std::vector<FreqIndex> out;
  for (const auto& g : within)
    if (!s.contains(g)) out.push_back(g);
  return IndexSet(within.dim(), std::move(out));
}

bool validate_symmetric(std::span<const FreqIndex> entries) {
  std::unordered_set<std::int64_t> keys;
  for (const auto& g : entries)
    if (!keys.insert(g.key()).second) return false;
  for (const auto& g : entries)
    if (!keys.contains((-g).key())) return false;
  return true;
}

bool validate_symmetric(const IndexSet& s) { return validate_symmetric(s.entries()); }

}  // namespace apw
