#pragma once

#include <string>
#include <string_view>

namespace proofmill {

/// Exact decimal money. Stored as a reduced rational over __int128 so
/// per-token pricing sums stay exact no matter how many usage records
/// accrue; binary floating point never enters the arithmetic.
class Money {
 public:
  Money() = default;

  static Money zero() { return Money(); }
  static Money from_int(long long units);
  // Parses "0.50", "-1.25", "3", ".5". Throws Error on anything else.
  static Money parse(std::string_view decimal);
  static Money ratio(long long num, long long den);

  Money operator+(const Money& o) const;
  Money& operator+=(const Money& o);
  Money operator-(const Money& o) const;
  Money operator*(long long k) const;
  Money divided_by(long long k) const;

  bool operator==(const Money& o) const;
  bool operator!=(const Money& o) const { return !(*this == o); }
  bool operator<(const Money& o) const;
  bool is_zero() const { return num_ == 0; }

  // Fixed-point rendering, round half away from zero: to_string(4) -> "3.5000".
  std::string to_string(int places = 4) const;

 private:
  Money(__int128 n, __int128 d);
  void normalize();

  __int128 num_ = 0;
  __int128 den_ = 1;
};

inline std::string usd(const Money& m, int places = 4) {
  std::string s = m.to_string(places);
  if (!s.empty() && s[0] == '-') return "-$" + s.substr(1);
  return "$" + s;
}

}  // namespace proofmill
