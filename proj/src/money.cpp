#include "proofmill/money.hpp"

#include <cctype>
#include <cstdlib>

#include "proofmill/errors.hpp"

namespace proofmill {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a == 0 ? 1 : a;
}

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v)
                            : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) digits.push_back('-');
  return {digits.rbegin(), digits.rend()};
}

__int128 pow10_128(int p) {
  __int128 r = 1;
  for (int i = 0; i < p; ++i) r *= 10;
  return r;
}

}  // namespace

Money::Money(__int128 n, __int128 d) : num_(n), den_(d) { normalize(); }

void Money::normalize() {
  if (den_ == 0) throw Error("money: zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  __int128 g = gcd128(num_, den_);
  num_ /= g;
  den_ /= g;
}

Money Money::from_int(long long units) { return Money(units, 1); }

Money Money::ratio(long long num, long long den) { return Money(num, den); }

Money Money::parse(std::string_view s) {
  if (s.empty()) throw Error("money: empty string");
  bool neg = false;
  size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  __int128 num = 0;
  __int128 den = 1;
  bool any_digit = false;
  bool seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) throw Error("money: malformed decimal: " + std::string(s));
      seen_dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error("money: malformed decimal: " + std::string(s));
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
    any_digit = true;
  }
  if (!any_digit) throw Error("money: malformed decimal: " + std::string(s));
  return Money(neg ? -num : num, den);
}

Money Money::operator+(const Money& o) const {
  return Money(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

Money& Money::operator+=(const Money& o) {
  *this = *this + o;
  return *this;
}

Money Money::operator-(const Money& o) const {
  return Money(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

Money Money::operator*(long long k) const { return Money(num_ * k, den_); }

Money Money::divided_by(long long k) const {
  if (k == 0) throw Error("money: division by zero");
  return Money(num_, den_ * k);
}

bool Money::operator==(const Money& o) const {
  return num_ == o.num_ && den_ == o.den_;
}

bool Money::operator<(const Money& o) const {
  return num_ * o.den_ < o.num_ * den_;
}

std::string Money::to_string(int places) const {
  __int128 scale = pow10_128(places);
  __int128 n = num_ < 0 ? -num_ : num_;
  __int128 scaled = n * scale;
  __int128 q = scaled / den_;
  __int128 rem = scaled % den_;
  if (rem * 2 >= den_) q += 1;  // half away from zero
  std::string digits = int128_to_string(q);
  if (static_cast<int>(digits.size()) <= places)
    digits.insert(0, places + 1 - digits.size(), '0');
  std::string out = digits.substr(0, digits.size() - places);
  if (places > 0) out += "." + digits.substr(digits.size() - places);
  if (num_ < 0 && q != 0) out.insert(0, 1, '-');
  return out;
}

}  // namespace proofmill
