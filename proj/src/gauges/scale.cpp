#include "ietlab/scale.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "ietlab/error.hpp"

namespace ietlab {

struct ScaleSequence::Node {
  char op = 0;  // '#' number, 'n' variable, '+', '-', '*', '/', '^', '~' negate, 'f' function
  double value = 0.0;
  std::string fn;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(double n) const {
    switch (op) {
      case '#': return value;
      case 'n': return n;
      case '~': return -lhs->eval(n);
      case '+': return lhs->eval(n) + rhs->eval(n);
      case '-': return lhs->eval(n) - rhs->eval(n);
      case '*': return lhs->eval(n) * rhs->eval(n);
      case '/': return lhs->eval(n) / rhs->eval(n);
      case '^': return std::pow(lhs->eval(n), rhs->eval(n));
      default: break;
    }
    const double x = lhs->eval(n);
    if (fn == "ln" || fn == "log") return std::log(x);
    if (fn == "exp") return std::exp(x);
    return std::sqrt(x);
  }
};

// Recursive descent: expr := term (('+'|'-') term)*, term := factor (('*'|'/') factor)*,
// factor := '-' factor | atom ('^' factor)?.
class ExprParser {
 public:
  using Node = ScaleSequence::Node;
  explicit ExprParser(std::string_view text) : s_(text) {}

  std::shared_ptr<const Node> parse() {
    auto node = expr();
    skip();
    if (pos_ != s_.size()) fail("trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, "scale expression \"" + std::string(s_) + "\": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static std::shared_ptr<const Node> make(char op, std::shared_ptr<const Node> l, std::shared_ptr<const Node> r) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->lhs = std::move(l);
    node->rhs = std::move(r);
    return node;
  }
  std::shared_ptr<const Node> expr() {
    auto node = term();
    for (;;) {
      if (eat('+')) node = make('+', node, term());
      else if (eat('-')) node = make('-', node, term());
      else return node;
    }
  }
  std::shared_ptr<const Node> term() {
    auto node = factor();
    for (;;) {
      if (eat('*')) node = make('*', node, factor());
      else if (eat('/')) node = make('/', node, factor());
      else return node;
    }
  }
  std::shared_ptr<const Node> factor() {
    if (eat('-')) return make('~', factor(), nullptr);
    auto base = atom();
    if (eat('^')) return make('^', base, factor());
    return base;
  }
  std::shared_ptr<const Node> atom() {
    skip();
    if (eat('(')) {
      auto node = expr();
      if (!eat(')')) fail("expected ')'");
      return node;
    }
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(std::string(s_.substr(pos_)), &used);
      pos_ += used;
      auto node = std::make_shared<Node>();
      node->op = '#';
      node->value = v;
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
      const std::string word(s_.substr(pos_, end - pos_));
      pos_ = end;
      auto node = std::make_shared<Node>();
      if (word == "n") {
        node->op = 'n';
        return node;
      }
      if (word != "ln" && word != "log" && word != "exp" && word != "sqrt") fail("unknown name " + word);
      if (!eat('(')) fail("expected '(' after " + word);
      node->op = 'f';
      node->fn = word;
      node->lhs = expr();
      if (!eat(')')) fail("expected ')'");
      return node;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

ScaleSequence ScaleSequence::power(double alpha) {
  ScaleSequence s;
  s.kind_ = Kind::Power;
  s.alpha_ = alpha;
  return s;
}

ScaleSequence ScaleSequence::power_log(double alpha, double beta) {
  ScaleSequence s;
  s.kind_ = beta == 0.0 ? Kind::Power : Kind::PowerLog;
  s.alpha_ = alpha;
  s.beta_ = beta;
  return s;
}

ScaleSequence ScaleSequence::table(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::Domain, "empty scale table");
  for (double v : values) {
    if (!(v > 0.0)) throw Error(ErrorKind::Domain, "scale values must be positive");
  }
  ScaleSequence s;
  s.kind_ = Kind::Table;
  s.horizon_ = values.size();
  s.table_ = std::move(values);
  return s;
}

ScaleSequence ScaleSequence::expr(std::string formula, std::uint64_t horizon) {
  ScaleSequence s;
  s.kind_ = Kind::Expr;
  s.expr_ = ExprParser(formula).parse();
  s.formula_ = std::move(formula);
  s.horizon_ = horizon;
  return s;
}

ScaleSequence ScaleSequence::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorKind::Parse, "scale needs a kind prefix: " + std::string(text));
  const std::string kind(text.substr(0, colon));
  const std::string body(text.substr(colon + 1));
  std::vector<double> nums;
  if (kind != "expr") {
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        nums.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "bad number in scale: " + item);
      }
    }
  }
  if (kind == "pow" && nums.size() == 1) return power(nums[0]);
  if (kind == "powlog" && nums.size() == 2) return power_log(nums[0], nums[1]);
  if (kind == "table") return table(std::move(nums));
  if (kind == "expr") return expr(body);
  throw Error(ErrorKind::Parse, "unknown scale spec: " + std::string(text));
}

std::uint64_t ScaleSequence::first_index() const {
  if (kind_ == Kind::PowerLog) return 2;
  if (kind_ == Kind::Expr && (formula_.find("ln") != std::string::npos || formula_.find("log") != std::string::npos)) {
    return 2;
  }
  return 1;
}

std::uint64_t ScaleSequence::horizon() const {
  if (kind_ == Kind::Table || kind_ == Kind::Expr) return horizon_;
  return std::numeric_limits<std::uint64_t>::max();
}

double ScaleSequence::operator()(std::uint64_t n) const {
  const double x = static_cast<double>(n);
  switch (kind_) {
    case Kind::Power: return std::pow(x, alpha_);
    case Kind::PowerLog: return std::pow(x, alpha_) * std::pow(std::log(x), beta_);
    case Kind::Table:
      if (n < 1 || n > table_.size()) throw Error(ErrorKind::Domain, "index outside scale table");
      return table_[n - 1];
    case Kind::Expr: return expr_->eval(x);
  }
  return 0.0;
}

double ScaleSequence::log_at(std::uint64_t n) const {
  const double x = static_cast<double>(n);
  switch (kind_) {
    case Kind::Power: return alpha_ * std::log(x);
    case Kind::PowerLog: return alpha_ * std::log(x) + beta_ * std::log(std::log(x));
    default: return std::log((*this)(n));
  }
}

std::optional<mpq_class> ScaleSequence::exact_at(std::uint64_t n) const {
  if (kind_ == Kind::Power && alpha_ >= 0.0 && alpha_ <= 64.0 && alpha_ == std::floor(alpha_)) {
    mpz_class out;
    mpz_ui_pow_ui(out.get_mpz_t(), n, static_cast<unsigned long>(alpha_));
    return mpq_class(out);
  }
  if (kind_ == Kind::Table) return mpq_class((*this)(n));
  return std::nullopt;
}

std::string ScaleSequence::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Power: os << "pow:" << alpha_; break;
    case Kind::PowerLog: os << "powlog:" << alpha_ << "," << beta_; break;
    case Kind::Table:
      os << "table:";
      for (std::size_t i = 0; i < table_.size(); ++i) os << (i ? "," : "") << table_[i];
      break;
    case Kind::Expr: os << "expr:" << formula_; break;
  }
  return os.str();
}

ScaleFlags classify_scale(const ScaleSequence& s) {
  ScaleFlags f;
  if (s.kind() == ScaleSequence::Kind::Power || s.kind() == ScaleSequence::Kind::PowerLog) {
    const double a = s.alpha();
    const double b = s.beta();
    f.certified_closed_form = true;
    f.monotone = a > 0.0 || (a == 0.0 && b >= 0.0);
    f.steady = true;
    f.two_jumpy = f.monotone && a > 0.0;
    f.bounded_ratio = true;
    f.nice = f.two_jumpy && f.bounded_ratio;
    return f;
  }

  const std::uint64_t H = std::min<std::uint64_t>(s.horizon(), 1 << 20);
  const std::uint64_t n0 = s.first_index();
  if (H < n0 + 8) throw Error(ErrorKind::Domain, "scale horizon too short to classify");
  const std::uint64_t half = std::max(n0, H / 2);

  f.monotone = true;
  double max_dev = 0.0;
  double tail_ratio = 0.0;
  for (std::uint64_t n = half; n < H; ++n) {
    const double d = s.log_at(n + 1) - s.log_at(n);
    if (d < 0.0) f.monotone = false;
    max_dev = std::max(max_dev, std::abs(std::expm1(d)));
    tail_ratio = std::max(tail_ratio, d);
  }
  double head_ratio = 0.0;
  for (std::uint64_t n = std::max(n0, H / 4); n < half; ++n) head_ratio = std::max(head_ratio, s.log_at(n + 1) - s.log_at(n));
  f.steady = max_dev <= 0.05;
  f.bounded_ratio = std::isfinite(tail_ratio) && tail_ratio <= 2.0 * std::max(head_ratio, 1e-12);

  // r_j = s_{2^{j+1}} / s_{2^j} - 1 against L + C/j; a positive limit L means two-jumpy.
  std::vector<double> js;
  std::vector<double> rs;
  for (std::uint64_t j = 1; (std::uint64_t{2} << j) <= H; ++j) {
    const std::uint64_t n = std::uint64_t{1} << j;
    if (n < n0) continue;
    js.push_back(1.0 / static_cast<double>(j));
    rs.push_back(std::min(std::expm1(s.log_at(2 * n) - s.log_at(n)), 1e6));
  }
  if (rs.size() > 6) {
    js.erase(js.begin(), js.end() - 6);
    rs.erase(rs.begin(), rs.end() - 6);
  }
  double limit = rs.empty() ? 0.0 : rs.back();
  if (rs.size() >= 3) {
    const double m = static_cast<double>(rs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      sx += js[i];
      sy += rs[i];
      sxx += js[i] * js[i];
      sxy += js[i] * rs[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    limit = (sy - slope * sx) / m;
  }
  const double min_r = rs.empty() ? 0.0 : *std::min_element(rs.begin(), rs.end());
  f.two_jumpy = f.monotone && min_r > 0.0 && limit > 0.02;
  f.nice = f.two_jumpy && f.bounded_ratio;
  return f;
}

}  // namespace ietlab
