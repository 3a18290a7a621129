#pragma once

#include <compare>
#include <limits>
#include <ostream>

namespace mixplan {

/// Non-negative extended real. Infinity is a distinct symbolic value, never a large
/// finite number, and all arithmetic saturates at it.
class Cost {
public:
    constexpr Cost() = default;
    constexpr Cost(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

    static constexpr Cost infinity() {
        Cost c;
        c.infinite_ = true;
        return c;
    }

    constexpr bool is_infinite() const { return infinite_; }
    constexpr bool is_finite() const { return !infinite_; }

    /// Finite value; 0 for infinity (check is_infinite first).
    constexpr double value() const { return infinite_ ? 0.0 : value_; }

    /// Finite value or +inf as a double, for display and JSON.
    double as_double() const {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend constexpr Cost operator+(Cost a, Cost b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return Cost(a.value_ + b.value_);
    }
    constexpr Cost& operator+=(Cost b) { return *this = *this + b; }

    /// Scaling by a non-negative weight. 0 * inf is inf: a weight never masks an
    /// infinite component.
    friend constexpr Cost operator*(double w, Cost a) {
        if (a.infinite_) return infinity();
        return Cost(w * a.value_);
    }

    friend constexpr bool operator==(Cost a, Cost b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }
    friend constexpr std::partial_ordering operator<=>(Cost a, Cost b) {
        if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
        if (a.infinite_) return std::partial_ordering::greater;
        if (b.infinite_) return std::partial_ordering::less;
        return a.value_ <=> b.value_;
    }

    friend std::ostream& operator<<(std::ostream& os, Cost c) {
        if (c.infinite_) return os << "inf";
        return os << c.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

}  // namespace mixplan
