#include "ocmdp/core.hpp"

#include <cctype>

namespace ocmdp {

Rat parse_rat(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) throw ParseError("empty number");
  auto dot = s.find('.');
  if (dot != std::string::npos && s.find('/') == std::string::npos) {
    // Decimal literal: exact conversion.
    bool neg = s[0] == '-';
    std::string body = (neg || s[0] == '+') ? s.substr(1) : s;
    dot = body.find('.');
    std::string digits = body.substr(0, dot) + body.substr(dot + 1);
    if (digits.empty()) throw ParseError("bad number '" + s + "'");
    for (char c : digits)
      if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("bad number '" + s + "'");
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, body.size() - dot - 1);
    Rat r(num, den);
    r.canonicalize();
    return neg ? Rat(-r) : r;
  }
  for (char c : s)
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-' || c == '+'))
      throw ParseError("bad number '" + s + "'");
  if (s[0] == '+') s.erase(0, 1);
  Rat r;
  if (r.set_str(s, 10) != 0) throw ParseError("bad number '" + s + "'");
  if (r.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
  r.canonicalize();
  return r;
}

std::string rat_str(const Rat& r) { return r.get_str(); }

double to_double(const Rat& r) { return r.get_d(); }

Counter parse_counter(std::string_view text) {
  std::string s = trim(text);
  if (s == "inf" || s == "infinity" || s == "oo") return kInf;
  if (s.empty()) throw ParseError("empty counter value");
  Counter v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("bad counter value '" + s + "'");
    if (v > (kMaxFinite - (c - '0')) / 10) throw ParseError("counter value too large '" + s + "'");
    v = v * 10 + (c - '0');
  }
  return v;
}

std::string counter_str(Counter k) { return k == kInf ? "inf" : std::to_string(k); }

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Counter checked_add(Counter a, Counter b) {
  if (a == kInf || b == kInf) return kInf;
  if (a > kMaxFinite - b) throw std::overflow_error("counter overflow");
  return a + b;
}

Counter checked_mul(Counter a, Counter b) {
  if (a == kInf || b == kInf) return kInf;
  if (a != 0 && b > kMaxFinite / a) throw std::overflow_error("counter overflow");
  return a * b;
}

}  // namespace ocmdp
