#include "ietlab/iet.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_set>
#include <sstream>

namespace ietlab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Value of "key=..." inside text; a bracketed list is returned without brackets.
std::string field_value(std::string_view text, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  const auto pos = text.find(needle);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::Parse, "missing '" + std::string(key) + "' in \"" + std::string(text) + "\"");
  }
  std::size_t start = pos + needle.size();
  if (start < text.size() && text[start] == '[') {
    const auto close = text.find(']', start);
    if (close == std::string_view::npos) throw Error(ErrorKind::Parse, "unterminated list");
    return std::string(text.substr(start + 1, close - start - 1));
  }
  std::size_t end = start;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  return std::string(text.substr(start, end - start));
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

void Iet::derive() {
  const int r = size();
  breakpoints_.assign(r + 1, ExactReal(0));
  for (int k = 0; k < r; ++k) breakpoints_[k + 1] = breakpoints_[k] + lengths_[k];

  coeffs_.assign(r, std::vector<int>(r, 0));
  translations_.assign(r, ExactReal(0));
  for (int k = 0; k < r; ++k) {
    for (int i = 0; i < k; ++i) coeffs_[k][i] -= 1;
    for (int i = 0; i < r; ++i) {
      if (perm_[i] < perm_[k]) coeffs_[k][i] += 1;
    }
    ExactReal h(0);
    for (int i = 0; i < r; ++i) {
      if (coeffs_[k][i] != 0) h += ExactReal(coeffs_[k][i]) * lengths_[i];
    }
    translations_[k] = std::move(h);
  }

  field_ = 0;
  for (const auto& l : lengths_) {
    if (l.radicand() != 0) field_ = l.radicand();
  }
  breakpoints_d_.resize(r + 1);
  translations_d_.resize(r);
  for (int k = 0; k <= r; ++k) breakpoints_d_[k] = breakpoints_[k].to_double();
  for (int k = 0; k < r; ++k) translations_d_[k] = translations_[k].to_double();
  breakpoints_d_[0] = 0.0;
  breakpoints_d_[r] = 1.0;
}

Iet Iet::build(std::vector<ExactReal> lengths, std::vector<int> perm) {
  const int r = static_cast<int>(lengths.size());
  if (r == 0) throw Error(ErrorKind::BadLengths, "no intervals");
  if (static_cast<int>(perm.size()) != r) {
    throw Error(ErrorKind::BadPermutation, "permutation has " + std::to_string(perm.size()) +
                                               " entries for " + std::to_string(r) + " intervals");
  }
  ExactReal total(0);
  for (const auto& l : lengths) {
    if (l.sign() <= 0) throw Error(ErrorKind::BadLengths, "nonpositive length " + l.to_string());
    total += l;
  }
  if (total != ExactReal(1)) throw Error(ErrorKind::BadLengths, "lengths sum to " + total.to_string());
  std::vector<bool> seen(r, false);
  for (int p : perm) {
    if (p < 1 || p > r || seen[p - 1]) throw Error(ErrorKind::BadPermutation, "not a bijection of 1..r");
    seen[p - 1] = true;
  }
  Iet t;
  t.lengths_ = std::move(lengths);
  t.perm_ = std::move(perm);
  t.derive();
  return t;
}

Iet Iet::identity() { return build({ExactReal(1)}, {1}); }

Iet Iet::rotation(const ExactReal& alpha) {
  ExactReal a = alpha.frac();
  if (a.is_zero()) return identity();
  return build({ExactReal(1) - a, a}, {2, 1});
}

Iet Iet::from_pieces(const std::vector<ExactReal>& breakpoints, const std::vector<ExactReal>& translations) {
  const int r = static_cast<int>(translations.size());
  if (r == 0 || static_cast<int>(breakpoints.size()) != r + 1) {
    throw Error(ErrorKind::BadLengths, "piece list shape mismatch");
  }
  if (!breakpoints.front().is_zero() || breakpoints.back() != ExactReal(1)) {
    throw Error(ErrorKind::BadLengths, "pieces do not tile [0,1)");
  }
  std::vector<ExactReal> lengths(r);
  for (int k = 0; k < r; ++k) lengths[k] = breakpoints[k + 1] - breakpoints[k];
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::vector<ExactReal> image_start(r);
  for (int k = 0; k < r; ++k) image_start[k] = breakpoints[k] + translations[k];
  std::sort(order.begin(), order.end(), [&](int a, int b) { return image_start[a] < image_start[b]; });
  std::vector<int> perm(r);
  ExactReal cursor(0);
  for (int pos = 0; pos < r; ++pos) {
    const int k = order[pos];
    if (image_start[k] != cursor) throw Error(ErrorKind::BadLengths, "images do not tile [0,1)");
    cursor += lengths[k];
    perm[k] = pos + 1;
  }
  return build(std::move(lengths), std::move(perm));
}

Iet Iet::parse(std::string_view text) {
  const std::string s = trim(text);
  if (s.rfind("rot:", 0) == 0) return rotation(ExactReal::parse(field_value(s, "alpha")));
  if (s.rfind("iet:", 0) != 0) {
    throw Error(ErrorKind::Parse, "IET literal must start with 'iet:' or 'rot:': \"" + s + "\"");
  }
  std::vector<ExactReal> lengths;
  for (const auto& item : split_commas(field_value(s, "lengths"))) lengths.push_back(ExactReal::parse(item));
  std::vector<int> perm;
  for (const auto& item : split_commas(field_value(s, "perm"))) {
    try {
      perm.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "bad permutation entry '" + item + "'");
    }
  }
  return build(std::move(lengths), std::move(perm));
}

int Iet::interval_of(const ExactReal& x) const {
  // first breakpoint strictly greater than x, among s_1..s_r
  auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, x);
  return static_cast<int>(it - breakpoints_.begin()) - 1;
}

ExactReal Iet::operator()(const ExactReal& x) const { return x + translations_[interval_of(x)]; }

CirclePoint Iet::evaluate(const CirclePoint& x) const { return CirclePoint::reduced((*this)(x.value())); }

Iet Iet::canonical() const {
  std::vector<ExactReal> bps{breakpoints_.front()};
  std::vector<ExactReal> hs{translations_.front()};
  for (int k = 1; k < size(); ++k) {
    if (translations_[k] == hs.back()) continue;
    bps.push_back(breakpoints_[k]);
    hs.push_back(translations_[k]);
  }
  bps.push_back(ExactReal(1));
  if (static_cast<int>(hs.size()) == size()) return *this;
  return from_pieces(bps, hs);
}

bool Iet::is_identity() const {
  return std::all_of(translations_.begin(), translations_.end(), [](const ExactReal& h) { return h.is_zero(); });
}

std::string Iet::to_string() const {
  std::ostringstream os;
  os << "iet: lengths=[";
  for (int k = 0; k < size(); ++k) os << (k ? "," : "") << lengths_[k];
  os << "] perm=[";
  for (int k = 0; k < size(); ++k) os << (k ? "," : "") << perm_[k];
  os << "]";
  return os.str();
}

bool operator==(const Iet& lhs, const Iet& rhs) {
  const Iet a = lhs.canonical();
  const Iet b = rhs.canonical();
  return a.lengths_ == b.lengths_ && a.perm_ == b.perm_;
}

Iet invert(const Iet& t) {
  const int r = t.size();
  std::vector<ExactReal> lengths(r);
  std::vector<int> perm(r);
  for (int k = 0; k < r; ++k) {
    const int pos = t.perm()[k] - 1;
    lengths[pos] = t.lengths()[k];
    perm[pos] = k + 1;
  }
  return Iet::build(std::move(lengths), std::move(perm));
}

Iet compose(const Iet& t, const Iet& s) {
  std::vector<ExactReal> bps;
  std::vector<ExactReal> hs;
  auto emit = [&](const ExactReal& start, ExactReal h) {
    if (!hs.empty() && hs.back() == h) return;
    bps.push_back(start);
    hs.push_back(std::move(h));
  };
  const auto& tb = t.breakpoints();
  for (int j = 0; j < s.size(); ++j) {
    const ExactReal& hj = s.translations()[j];
    ExactReal lo = s.breakpoints()[j];
    const ExactReal image_end = s.breakpoints()[j + 1] + hj;
    int k = t.interval_of(lo + hj);
    for (;;) {
      emit(lo, hj + t.translations()[k]);
      if (image_end <= tb[k + 1]) break;
      lo = tb[k + 1] - hj;
      ++k;
    }
  }
  bps.push_back(ExactReal(1));
  return Iet::from_pieces(bps, hs);
}

Iet power(const Iet& t, std::uint64_t n, PowerMode mode) {
  Iet result = Iet::identity();
  if (mode == PowerMode::Iterative) {
    for (std::uint64_t i = 0; i < n; ++i) result = compose(t, result);
    return result;
  }
  Iet base = t;
  while (n > 0) {
    if (n & 1U) result = compose(result, base);
    n >>= 1U;
    if (n > 0) base = compose(base, base);
  }
  return result;
}

ExactReal iterate(const Iet& t, ExactReal x, std::uint64_t n) {
  for (std::uint64_t i = 0; i < n; ++i) x += t.translations()[t.interval_of(x)];
  return x;
}

// ---------------------------------------------------------------------------
// Delta sets.

bool DeltaSet::contains(const ExactReal& x) const { return std::binary_search(points.begin(), points.end(), x); }

bool DeltaSet::subset_of(const DeltaSet& other) const {
  return std::all_of(points.begin(), points.end(), [&](const ExactReal& p) { return other.contains(p); });
}

DeltaSet delta_set(const Iet& t) {
  DeltaSet d;
  for (const auto& h : t.translations()) d.points.push_back(h.frac());
  std::sort(d.points.begin(), d.points.end());
  d.points.erase(std::unique(d.points.begin(), d.points.end()), d.points.end());
  return d;
}

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Walks T^k for k = 1, 2, ... keeping, for every maximal piece of T^k, the
// number of visits to each interval of T. The translation of T^k on a piece
// is then sum_i c_i h_i, an integer combination of the lengths, so the
// pairwise differences can be deduplicated as integer vectors before any
// exact arithmetic happens. Vectors are reduced modulo (1,...,1) (the sum of
// the lengths is 1) by zeroing their first coordinate.
class DeltaPrimeWalker {
 public:
  explicit DeltaPrimeWalker(const Iet& t) : t_(t), r_(t.size()) {
    pieces_.push_back(Piece{ExactReal(0), ExactReal(0), std::vector<int>(r_, 0)});
  }

  void step() {
    std::vector<Piece> next;
    next.reserve(pieces_.size() + static_cast<std::size_t>(r_));
    const auto& tb = t_.breakpoints();
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
      const Piece& piece = pieces_[p];
      const ExactReal& end = (p + 1 < pieces_.size()) ? pieces_[p + 1].start : one_;
      const ExactReal shift = piece.image - piece.start;
      const ExactReal image_end = end + shift;
      ExactReal lo = piece.start;
      ExactReal cur = piece.image;
      int k = t_.interval_of(cur);
      for (;;) {
        std::vector<int> counts = piece.counts;
        counts[k] += 1;
        push(next, Piece{lo, cur + t_.translations()[k], std::move(counts)});
        if (image_end <= tb[k + 1]) break;
        cur = tb[k + 1];
        lo = cur - shift;
        ++k;
      }
    }
    pieces_ = std::move(next);
    ++k_;
    absorb();
  }

  int power() const { return k_; }
  std::size_t card() const { return values_.size(); }
  std::vector<ExactReal> points() const { return {values_.begin(), values_.end()}; }

 private:
  struct Piece {
    ExactReal start;
    ExactReal image;
    std::vector<int> counts;
  };

  static void push(std::vector<Piece>& out, Piece piece) {
    if (!out.empty() && out.back().counts == piece.counts) return;  // same translation, contiguous
    out.push_back(std::move(piece));
  }

  void absorb() {
    std::unordered_set<std::vector<std::int64_t>, VecHash> level;
    for (const auto& piece : pieces_) {
      std::vector<std::int64_t> w(r_, 0);
      for (int i = 0; i < r_; ++i) {
        if (piece.counts[i] == 0) continue;
        const auto& row = t_.translation_coeffs()[i];
        for (int j = 0; j < r_; ++j) w[j] += static_cast<std::int64_t>(piece.counts[i]) * row[j];
      }
      const std::int64_t w0 = w[0];
      for (auto& x : w) x -= w0;
      level.insert(std::move(w));
    }
    std::vector<std::vector<std::int64_t>> elems(level.begin(), level.end());
    std::vector<std::int64_t> diff(r_);
    for (const auto& a : elems) {
      for (const auto& b : elems) {
        for (int j = 0; j < r_; ++j) diff[j] = a[j] - b[j];
        if (seen_.insert(diff).second) values_.insert(value_of(diff));
      }
    }
  }

  ExactReal value_of(const std::vector<std::int64_t>& w) const {
    ExactReal v(0);
    for (int j = 0; j < r_; ++j) {
      if (w[j] != 0) v += ExactReal(static_cast<long>(w[j])) * t_.lengths()[j];
    }
    return v.frac();
  }

  const Iet& t_;
  int r_;
  int k_ = 0;
  ExactReal one_{1};
  std::vector<Piece> pieces_;
  std::unordered_set<std::vector<std::int64_t>, VecHash> seen_;
  std::set<ExactReal> values_;
};

}  // namespace

DeltaSet delta_prime_n(const Iet& t, int n) {
  if (n < 1) throw Error(ErrorKind::Domain, "delta_prime_n needs n >= 1");
  DeltaPrimeWalker walker(t);
  while (walker.power() < n) walker.step();
  DeltaSet d;
  d.points = walker.points();
  d.horizon = n;
  return d;
}

std::vector<std::size_t> delta_prime_cards(const Iet& t, const std::vector<int>& ladder) {
  std::vector<std::size_t> cards;
  DeltaPrimeWalker walker(t);
  for (int n : ladder) {
    if (n < walker.power() || n < 1) throw Error(ErrorKind::Domain, "ladder must be increasing and >= 1");
    while (walker.power() < n) walker.step();
    cards.push_back(walker.card());
  }
  return cards;
}

// ---------------------------------------------------------------------------

KeaneVerdict keane_certificate(const Iet& t, int depth) {
  if (depth < 1) throw Error(ErrorKind::Domain, "depth must be >= 1");
  const int r = t.size();
  if (r == 1) return Inconclusive{"no discontinuities (r = 1)"};
  const auto& bps = t.breakpoints();
  std::vector<ExactReal> orbit(bps.begin() + 1, bps.end() - 1);
  for (int k = 1; k <= depth; ++k) {
    for (int i = 0; i < r - 1; ++i) {
      orbit[i] = t(orbit[i]);
      auto it = std::lower_bound(bps.begin() + 1, bps.end() - 1, orbit[i]);
      if (it != bps.end() - 1 && *it == orbit[i]) {
        return Violated{k, i + 1, static_cast<int>(it - bps.begin())};
      }
    }
  }
  const bool all_rational =
      std::all_of(t.lengths().begin(), t.lengths().end(), [](const ExactReal& l) { return l.is_rational(); });
  if (all_rational) return Inconclusive{"rational lengths: orbits are periodic beyond the checked depth"};
  return CertifiedMinimal{};
}

std::string to_string(const KeaneVerdict& v) {
  if (std::holds_alternative<CertifiedMinimal>(v)) return "certified-minimal-to-depth";
  if (const auto* bad = std::get_if<Violated>(&v)) {
    return "violated(" + std::to_string(bad->k) + "," + std::to_string(bad->i) + "," + std::to_string(bad->j) + ")";
  }
  return "inconclusive(" + std::get<Inconclusive>(v).reason + ")";
}

}  // namespace ietlab
