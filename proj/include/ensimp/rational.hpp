#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "errors.hpp"

namespace ensimp {

/// Exact fraction over 128-bit integers, always stored in lowest terms with a
/// positive denominator. Large enough for every Shapley weight with n <= 20.
class Rational {
public:
    __extension__ using Int = __int128;

    constexpr Rational() = default;
    constexpr Rational(Int num, Int den = 1) : num_(num), den_(den) {
        if (den_ == 0) {
            throw DomainError("rational with zero denominator");
        }
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const Int g = gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    constexpr Int numerator() const noexcept { return num_; }
    constexpr Int denominator() const noexcept { return den_; }

    double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend constexpr Rational operator+(const Rational& a, const Rational& b) {
        const Int g = gcd(a.den_, b.den_);
        return Rational(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
    }
    friend constexpr Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    constexpr Rational& operator+=(const Rational& o) { return *this = *this + o; }

    friend constexpr bool operator==(const Rational&, const Rational&) = default;
    friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const Int lhs = a.num_ * b.den_;
        const Int rhs = b.num_ * a.den_;
        return lhs < rhs ? std::strong_ordering::less
                         : (lhs > rhs ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    std::string str() const { return to_string(num_) + "/" + to_string(den_); }

private:
    static constexpr Int gcd(Int a, Int b) {
        while (b != 0) {
            const Int t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    static std::string to_string(Int v) {
        if (v == 0) return "0";
        const bool neg = v < 0;
        std::string s;
        while (v != 0) {
            const int digit = static_cast<int>(v % 10);
            s.insert(s.begin(), static_cast<char>('0' + (neg ? -digit : digit)));
            v /= 10;
        }
        return neg ? "-" + s : s;
    }

    Int num_ = 0;
    Int den_ = 1;
};

/// Binomial coefficient C(n, k), exact for n <= 32.
constexpr std::uint64_t binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t c = 1;
    for (unsigned j = 1; j <= k; ++j) {
        c = c * (n - k + j) / j;
    }
    return c;
}

} // namespace ensimp
