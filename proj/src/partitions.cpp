#include "ocmdp/partitions.hpp"

#include <algorithm>
#include <sstream>

namespace ocmdp {

namespace {
Counter sat_mul(Counter a, Counter b) {
  if (a != 0 && b > kMaxFinite / a) return kMaxFinite;
  return a * b;
}
}  // namespace

int floor_log2(Counter x) {
  int l = -1;
  while (x > 0) {
    x >>= 1;
    ++l;
  }
  return l;
}

int size_exponent(const Interval& i) {
  if (!i.bounded()) return -1;
  Counter s = i.size() + 1;
  if (s < 2 || (s & (s - 1)) != 0) return -1;
  return floor_log2(s);
}

std::vector<Interval> refine(const Interval& i) {
  std::vector<Interval> out;
  if (!i.bounded()) {
    out.push_back(i);
    return out;
  }
  Interval cur = i;
  while (cur.lo <= cur.hi) {
    int l = floor_log2(cur.size() + 1);
    Counter piece = (Counter(1) << l) - 1;
    if (piece == cur.size()) {
      out.push_back(cur);
      break;
    }
    out.push_back({cur.lo, cur.lo + piece - 1});
    cur.lo += piece;
  }
  return out;
}

Partition isolate(const Partition& p, Counter k) {
  Partition out;
  for (const auto& i : p) {
    if (i.contains(k) && k != i.hi) {
      out.push_back({i.lo, k});
      out.push_back({k + 1, i.hi});
    } else {
      out.push_back(i);
    }
  }
  return out;
}

Partition refine_partition(const Partition& p) {
  Partition out;
  for (const auto& i : p)
    for (const auto& j : refine(i)) out.push_back(j);
  return out;
}

std::string check_covers(const Partition& p, Counter B) {
  Counter expect = 1;
  for (size_t idx = 0; idx < p.size(); ++idx) {
    const auto& i = p[idx];
    if (i.lo != expect)
      return "interval " + std::to_string(idx) + " starts at " + counter_str(i.lo) + ", expected " +
             counter_str(expect);
    if (i.hi < i.lo) return "interval " + std::to_string(idx) + " is empty";
    if (!i.bounded()) {
      if (idx + 1 != p.size()) return "unbounded interval is not last";
      if (B != kInf) return "unbounded interval with finite bound";
      return "";
    }
    expect = i.hi + 1;
  }
  if (B == kInf) return "no unbounded interval although the bound is infinite";
  if (expect != B) return "partition ends at " + counter_str(expect - 1) + ", expected " + counter_str(B - 1);
  return "";
}

int find_interval(const Partition& p, Counter k) {
  size_t lo = 0, hi = p.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (p[mid].hi < k)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < p.size() && p[lo].contains(k)) return static_cast<int>(lo);
  return -1;
}

PartitionStream::PartitionStream(Counter d, Counter n, Counter B) : d_(d), n_(n), B_(B) {
  if (d < 1 || n < 1) throw std::invalid_argument("d and n must be at least 1");
  reset();
}

void PartitionStream::reset() {
  started_ = false;
  done_ = false;
  lengths_.clear();
  if (B_ != kInf) {
    Counter total = B_ - 1;
    if (total == 0) {
      count_ = 0;
      return;
    }
    if (total > sat_mul(d_, n_)) done_ = true;
    count_ = 0;
  } else {
    count_ = 0;
  }
}

bool PartitionStream::first_of_count() {
  lengths_.assign(static_cast<size_t>(count_), 1);
  if (B_ == kInf) return true;
  Counter total = B_ - 1;
  if (count_ > total || total > sat_mul(count_, n_)) return false;
  Counter rem = total;
  for (Counter i = 0; i < count_; ++i) {
    Counter rest = count_ - i - 1;
    Counter v = std::max<Counter>(1, rem - sat_mul(n_, rest));
    lengths_[static_cast<size_t>(i)] = v;
    rem -= v;
  }
  return true;
}

bool PartitionStream::advance() {
  if (B_ == kInf) {
    for (Counter i = count_ - 1; i >= 0; --i) {
      auto& l = lengths_[static_cast<size_t>(i)];
      if (l < n_) {
        ++l;
        for (Counter j = i + 1; j < count_; ++j) lengths_[static_cast<size_t>(j)] = 1;
        return true;
      }
    }
    return false;
  }
  // Fixed sum: bump position i, refill the suffix minimally.
  Counter total = B_ - 1;
  for (Counter i = count_ - 2; i >= 0; --i) {
    Counter prefix = 0;
    for (Counter j = 0; j < i; ++j) prefix += lengths_[static_cast<size_t>(j)];
    Counter cand = lengths_[static_cast<size_t>(i)] + 1;
    if (cand > n_) continue;
    Counter rest_count = count_ - i - 1;
    Counter rest = total - prefix - cand;
    if (rest < rest_count || rest > sat_mul(n_, rest_count)) continue;
    lengths_[static_cast<size_t>(i)] = cand;
    for (Counter j = i + 1; j < count_; ++j) {
      Counter after = count_ - j - 1;
      Counter v = std::max<Counter>(1, rest - sat_mul(n_, after));
      lengths_[static_cast<size_t>(j)] = v;
      rest -= v;
    }
    return true;
  }
  return false;
}

Partition PartitionStream::build() const {
  Partition p;
  Counter lo = 1;
  for (Counter l : lengths_) {
    p.push_back({lo, lo + l - 1});
    lo += l;
  }
  if (B_ == kInf) p.push_back({lo, kInf});
  return p;
}

std::optional<Partition> PartitionStream::next() {
  if (done_) return std::nullopt;
  if (B_ != kInf && B_ - 1 == 0) {
    done_ = true;
    return Partition{};
  }
  const Counter max_count = (B_ == kInf) ? d_ - 1 : d_;
  if (!started_) {
    started_ = true;
    count_ = (B_ == kInf) ? 0 : 1;
    while (count_ <= max_count && !first_of_count()) ++count_;
    if (count_ > max_count) {
      done_ = true;
      return std::nullopt;
    }
    return build();
  }
  if (advance()) return build();
  ++count_;
  while (count_ <= max_count && !first_of_count()) ++count_;
  if (count_ > max_count) {
    done_ = true;
    return std::nullopt;
  }
  return build();
}

std::vector<Partition> enumerate_partitions(Counter d, Counter n, Counter B) {
  std::vector<Partition> out;
  PartitionStream s(d, n, B);
  while (auto p = s.next()) out.push_back(std::move(*p));
  return out;
}

Partition expand_periodic(const PeriodicPartition& pp, Counter upto) {
  Partition out;
  if (pp.period < 1) throw std::invalid_argument("period must be positive");
  for (Counter shift = 0; shift < upto; shift += pp.period) {
    for (const auto& i : pp.window) {
      Counter lo = i.lo + shift;
      if (lo > upto) return out;
      out.push_back({lo, std::min(i.hi + shift, upto)});
    }
  }
  return out;
}

std::string format_partition(const Partition& p) {
  std::ostringstream os;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) os << ',';
    os << p[i].lo << '-' << counter_str(p[i].hi);
  }
  return os.str();
}

Partition parse_partition(std::string_view text) {
  Partition p;
  std::string t = trim(text);
  if (t.empty() || t == "{}") return p;
  for (const auto& part : split(t, ',')) {
    auto dash = part.find('-');
    Interval i;
    if (dash == std::string::npos) {
      i.lo = i.hi = parse_counter(part);
    } else {
      i.lo = parse_counter(part.substr(0, dash));
      i.hi = parse_counter(part.substr(dash + 1));
    }
    if (i.lo == kInf || i.lo < 1 || i.hi < i.lo) throw ParseError("bad interval '" + part + "'");
    p.push_back(i);
  }
  return p;
}

std::string format_periodic(const PeriodicPartition& pp) {
  return "period=" + std::to_string(pp.period) + "; window=" + format_partition(pp.window);
}

PeriodicPartition parse_periodic(std::string_view text) {
  PeriodicPartition pp;
  bool have_period = false, have_window = false;
  for (const auto& field : split(text, ';')) {
    if (field.empty()) continue;
    auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value in '" + field + "'");
    std::string key = trim(field.substr(0, eq));
    std::string val = trim(field.substr(eq + 1));
    if (key == "period") {
      pp.period = parse_counter(val);
      have_period = true;
    } else if (key == "window") {
      pp.window = parse_partition(val);
      have_window = true;
    } else {
      throw ParseError("unknown key '" + key + "'");
    }
  }
  if (!have_period || pp.period < 1 || pp.period == kInf) throw ParseError("missing or bad period");
  if (!have_window) pp.window = {{1, pp.period}};
  std::string err = check_covers(pp.window, pp.period + 1);
  if (!err.empty()) throw ParseError("window does not cover [1,period]: " + err);
  return pp;
}

}  // namespace ocmdp
