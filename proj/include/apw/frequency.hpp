#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace apw {

inline constexpr int kMaxDim = 3;

/// A multi-index G in Z^d. Components past the problem dimension are zero.
struct FreqIndex {
  std::array<int, kMaxDim> c{};

  static FreqIndex of(std::initializer_list<int> comps);

  int norm2() const { return c[0] * c[0] + c[1] * c[1] + c[2] * c[2]; }
  int max_abs() const;

  FreqIndex operator-() const { return {{-c[0], -c[1], -c[2]}}; }
  friend FreqIndex operator+(const FreqIndex& a, const FreqIndex& b) {
    return {{a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
  }
  friend FreqIndex operator-(const FreqIndex& a, const FreqIndex& b) {
    return {{a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
  }
  friend bool operator==(const FreqIndex&, const FreqIndex&) = default;

  /// Injective packing into 63 bits, valid for |component| < 2^20.
  std::int64_t key() const;

  std::string to_string(int dim) const;
};

/// Canonical order: ascending |G|^2, ties broken lexicographically.
bool canonical_less(const FreqIndex& a, const FreqIndex& b);

/// Representative of the pair {G, -G}: whichever comes first canonically.
FreqIndex pair_representative(const FreqIndex& g);

/// Finite set of frequencies in canonical order. Immutable; copies share storage.
class IndexSet {
 public:
  explicit IndexSet(int dim = 1);
  /// Sorts canonically and drops duplicates. Throws if dim is outside 1..3 or
  /// an entry has nonzero components beyond dim.
  IndexSet(int dim, std::vector<FreqIndex> entries);

  int dim() const { return dim_; }
  std::size_t size() const { return data_->entries.size(); }
  bool empty() const { return data_->entries.empty(); }
  std::span<const FreqIndex> entries() const { return data_->entries; }
  const FreqIndex& operator[](std::size_t i) const { return data_->entries[i]; }
  auto begin() const { return data_->entries.begin(); }
  auto end() const { return data_->entries.end(); }

  std::optional<std::size_t> find(const FreqIndex& g) const;
  bool contains(const FreqIndex& g) const { return find(g).has_value(); }

  /// Largest |G|^2 over the entries, 0 when empty.
  int max_norm2() const;
  /// Largest |component| over the entries, 0 when empty.
  int max_abs_component() const;

  friend bool operator==(const IndexSet& a, const IndexSet& b);

 private:
  struct Data {
    std::vector<FreqIndex> entries;
    std::unordered_map<std::int64_t, std::size_t> position;
  };
  int dim_;
  std::shared_ptr<const Data> data_;
};

/// All lattice points with |G| <= radius.
IndexSet ball(int radius, int dim);

IndexSet set_union(const IndexSet& a, const IndexSet& b);

/// within \ s.
IndexSet complement_candidates(const IndexSet& s, const IndexSet& within);

/// True iff every entry's negation is present and there are no duplicates.
bool validate_symmetric(std::span<const FreqIndex> entries);
bool validate_symmetric(const IndexSet& s);

}  // namespace apw
