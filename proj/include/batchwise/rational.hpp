#pragma once

#include <string>
#include <string_view>

namespace batchwise {

/// Exact rational number over 64-bit numerator/denominator, always reduced
/// and with a positive denominator. Intermediate products are computed in
/// 128 bits; a result that does not fit back into 64 bits after reduction
/// throws std::overflow_error.
class Rational {
public:
    Rational() = default;
    Rational(long long value) : num_(value), den_(1) {}  // implicit by design
    Rational(long long numerator, long long denominator);

    /// Parses a plain decimal literal ("123", "-4.75", "0.00002") exactly.
    static Rational from_decimal(std::string_view text);

    long long numerator() const { return num_; }
    long long denominator() const { return den_; }
    bool is_integer() const { return den_ == 1; }

    double to_double() const;

    /// "1565050" when integral, otherwise "13/3".
    std::string to_string() const;

    Rational operator-() const;
    Rational& operator+=(const Rational& other);
    Rational& operator-=(const Rational& other);
    Rational& operator*=(const Rational& other);
    Rational& operator/=(const Rational& other);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

private:
    static Rational make(__int128 numerator, __int128 denominator);

    long long num_ = 0;
    long long den_ = 1;
};

} // namespace batchwise
