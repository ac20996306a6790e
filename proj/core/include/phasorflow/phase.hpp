#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace phasorflow {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::a, Phase::b, Phase::c};

constexpr int index_of(Phase p) noexcept { return static_cast<int>(p); }

constexpr char to_char(Phase p) noexcept { return "abc"[index_of(p)]; }

std::optional<Phase> parse_phase(char ch) noexcept;
Phase parse_phase_or_throw(std::string_view text);

/// Subset of {a, b, c}. Iteration is always in canonical order (a, b, c).
class PhaseSet {
  public:
    constexpr PhaseSet() = default;
    constexpr PhaseSet(std::initializer_list<Phase> phases) {
        for (Phase p : phases) bits_ |= bit(p);
    }

    static constexpr PhaseSet all() noexcept { return PhaseSet{Phase::a, Phase::b, Phase::c}; }
    /// Parses "abc", "ac", "b", ... Throws ValidationError on bad characters or repeats.
    static PhaseSet parse(std::string_view text);

    constexpr bool contains(Phase p) const noexcept { return (bits_ & bit(p)) != 0; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr int size() const noexcept {
        return ((bits_ >> 0) & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1);
    }
    constexpr bool is_subset_of(PhaseSet other) const noexcept {
        return (bits_ & ~other.bits_) == 0;
    }
    constexpr PhaseSet intersect(PhaseSet other) const noexcept {
        PhaseSet r;
        r.bits_ = static_cast<std::uint8_t>(bits_ & other.bits_);
        return r;
    }
    constexpr PhaseSet unite(PhaseSet other) const noexcept {
        PhaseSet r;
        r.bits_ = static_cast<std::uint8_t>(bits_ | other.bits_);
        return r;
    }
    constexpr void insert(Phase p) noexcept { bits_ |= bit(p); }

    /// Position of `p` in the reduced (canonically ordered) vector, or -1.
    constexpr int reduced_index(Phase p) const noexcept {
        if (!contains(p)) return -1;
        int idx = 0;
        for (Phase q : kAllPhases) {
            if (q == p) return idx;
            if (contains(q)) ++idx;
        }
        return -1;
    }

    /// The k-th phase present in canonical order.
    constexpr Phase at(int k) const noexcept {
        for (Phase q : kAllPhases) {
            if (contains(q) && k-- == 0) return q;
        }
        return Phase::a;
    }

    std::string str() const;

    constexpr std::uint8_t bits() const noexcept { return bits_; }
    friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

    class iterator {
      public:
        constexpr iterator(std::uint8_t bits, int pos) : bits_(bits), pos_(pos) { skip(); }
        constexpr Phase operator*() const noexcept { return static_cast<Phase>(pos_); }
        constexpr iterator& operator++() noexcept {
            ++pos_;
            skip();
            return *this;
        }
        friend constexpr bool operator==(const iterator&, const iterator&) = default;

      private:
        constexpr void skip() noexcept {
            while (pos_ < 3 && ((bits_ >> pos_) & 1) == 0) ++pos_;
        }
        std::uint8_t bits_;
        int pos_;
    };

    constexpr iterator begin() const noexcept { return {bits_, 0}; }
    constexpr iterator end() const noexcept { return {bits_, 3}; }

  private:
    static constexpr std::uint8_t bit(Phase p) noexcept {
        return static_cast<std::uint8_t>(1u << index_of(p));
    }
    std::uint8_t bits_ = 0;
};

}  // namespace phasorflow
