#pragma once

#include <cmath>
#include <limits>
#include <ostream>

namespace cce {

// Edit cost in path-length units. Infinity is a dedicated sentinel, not a
// large float, so that no finite sum can ever compare equal to it.
class Cost {
public:
    Cost() : value_(0.0), infinite_(false) {}
    explicit Cost(double value) : value_(value), infinite_(false) {}

    static Cost infinite() {
        Cost c;
        c.infinite_ = true;
        return c;
    }

    bool is_infinite() const { return infinite_; }

    // Finite value; callers must check is_infinite() first.
    double value() const { return value_; }

    Cost& operator+=(const Cost& other) {
        if (other.infinite_) infinite_ = true;
        if (!infinite_) value_ += other.value_;
        return *this;
    }

    friend Cost operator+(Cost lhs, const Cost& rhs) {
        lhs += rhs;
        return lhs;
    }

    friend bool operator<(const Cost& a, const Cost& b) {
        if (a.infinite_) return false;
        if (b.infinite_) return true;
        return a.value_ < b.value_;
    }

    friend bool operator==(const Cost& a, const Cost& b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ && b.infinite_;
        return a.value_ == b.value_;
    }

    friend bool operator!=(const Cost& a, const Cost& b) { return !(a == b); }
    friend bool operator>(const Cost& a, const Cost& b) { return b < a; }
    friend bool operator<=(const Cost& a, const Cost& b) { return !(b < a); }
    friend bool operator>=(const Cost& a, const Cost& b) { return !(a < b); }

    friend std::ostream& operator<<(std::ostream& os, const Cost& c) {
        if (c.infinite_) return os << "inf";
        return os << c.value_;
    }

private:
    double value_;
    bool infinite_;
};

} // namespace cce
