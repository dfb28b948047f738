#include "batchwise/rational.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "batchwise/errors.hpp"

namespace batchwise {

namespace {

using Int128 = __int128;

long long narrow(Int128 value) {
    if (value > Int128(INT64_MAX) || value < Int128(INT64_MIN)) {
        throw std::overflow_error("rational overflow past 64 bits");
    }
    return static_cast<long long>(value);
}

Int128 abs128(Int128 value) { return value < 0 ? -value : value; }

Int128 gcd128(Int128 a, Int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        Int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

} // namespace

Rational Rational::make(Int128 numerator, Int128 denominator) {
    if (denominator == 0) throw DomainError("rational with zero denominator");
    if (denominator < 0) {
        numerator = -numerator;
        denominator = -denominator;
    }
    const Int128 g = gcd128(numerator, denominator);
    if (g > 1) {
        numerator /= g;
        denominator /= g;
    }
    Rational r;
    r.num_ = narrow(numerator);
    r.den_ = narrow(denominator);
    return r;
}

Rational::Rational(long long numerator, long long denominator) {
    *this = make(numerator, denominator);
}

Rational Rational::from_decimal(std::string_view text) {
    std::size_t pos = 0;
    auto fail = [&] { throw DomainError("not a decimal literal: '" + std::string(text) + "'"); };

    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    std::size_t end = text.size();
    while (end > pos && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
    if (pos == end) fail();

    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') {
        negative = text[pos] == '-';
        ++pos;
    }

    Int128 value = 0;
    Int128 scale = 1;
    bool seen_digit = false;
    bool seen_dot = false;
    for (; pos < end; ++pos) {
        char c = text[pos];
        if (c == '.') {
            if (seen_dot) fail();
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9') fail();
        seen_digit = true;
        value = value * 10 + (c - '0');
        if (seen_dot) scale *= 10;
        if (value > Int128(INT64_MAX) || scale > Int128(INT64_MAX)) {
            throw std::overflow_error("decimal literal too large for rational");
        }
    }
    if (!seen_digit) fail();
    if (negative) value = -value;
    return make(value, scale);
}

double Rational::to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return make(-Int128(num_), Int128(den_)); }

Rational& Rational::operator+=(const Rational& other) {
    *this = make(Int128(num_) * other.den_ + Int128(other.num_) * den_, Int128(den_) * other.den_);
    return *this;
}

Rational& Rational::operator-=(const Rational& other) {
    *this = make(Int128(num_) * other.den_ - Int128(other.num_) * den_, Int128(den_) * other.den_);
    return *this;
}

Rational& Rational::operator*=(const Rational& other) {
    *this = make(Int128(num_) * other.num_, Int128(den_) * other.den_);
    return *this;
}

Rational& Rational::operator/=(const Rational& other) {
    if (other.num_ == 0) throw DomainError("rational division by zero");
    *this = make(Int128(num_) * other.den_, Int128(den_) * other.num_);
    return *this;
}

bool operator<(const Rational& a, const Rational& b) {
    return Int128(a.num_) * b.den_ < Int128(b.num_) * a.den_;
}

} // namespace batchwise
