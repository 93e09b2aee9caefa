#include "kinvf/vector_fields.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace kinvf {

namespace {

int rotation_slot(int dim, int i, int j) {
  int slot = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b) {
      if (a == i && b == j) return slot;
      ++slot;
    }
  throw std::invalid_argument("rotation indices out of range");
}

FieldId make(FieldKind k, int dim, int i, int j, Flavor fl) {
  FieldId z;
  z.kind = k;
  z.dim = dim;
  z.i = i;
  z.j = j;
  z.flavor = fl;
  validate(z);
  return z;
}

}  // namespace

FieldId FieldId::time_translation(int dim, Flavor fl) {
  return make(FieldKind::time_translation, dim, 0, 0, fl);
}
FieldId FieldId::space_translation(int dim, int i, Flavor fl) {
  return make(FieldKind::space_translation, dim, i, 0, fl);
}
FieldId FieldId::uniform_motion(int dim, int i, Flavor fl) {
  return make(FieldKind::uniform_motion, dim, i, 0, fl);
}
FieldId FieldId::rotation(int dim, int i, int j, Flavor fl) {
  return make(FieldKind::rotation, dim, i, j, fl);
}
FieldId FieldId::spatial_scaling(int dim, Flavor fl) {
  return make(FieldKind::spatial_scaling, dim, 0, 0, fl);
}
FieldId FieldId::space_time_scaling(int dim, Flavor fl) {
  return make(FieldKind::space_time_scaling, dim, 0, 0, fl);
}

void validate(const FieldId& z) {
  if (z.dim < 1 || z.dim > 3) throw std::invalid_argument("field: dimension must be 1, 2 or 3");
  switch (z.kind) {
    case FieldKind::space_translation:
    case FieldKind::uniform_motion:
      if (z.i < 0 || z.i >= z.dim) throw std::invalid_argument("field: index out of range");
      break;
    case FieldKind::rotation:
      if (z.i < 0 || z.j >= z.dim || z.i >= z.j)
        throw std::invalid_argument("field: rotation needs 0 <= i < j < dim");
      break;
    default:
      break;
  }
}

int FieldId::order_index() const {
  const int n = dim;
  switch (kind) {
    case FieldKind::time_translation: return 0;
    case FieldKind::space_translation: return 1 + i;
    case FieldKind::uniform_motion: return 1 + n + i;
    case FieldKind::rotation: return 1 + 2 * n + rotation_slot(n, i, j);
    case FieldKind::spatial_scaling: return 1 + 2 * n + n * (n - 1) / 2;
    case FieldKind::space_time_scaling: return 2 + 2 * n + n * (n - 1) / 2;
  }
  return -1;
}

std::string FieldId::name() const {
  switch (kind) {
    case FieldKind::time_translation: return "dt";
    case FieldKind::space_translation: return "dx" + std::to_string(i + 1);
    case FieldKind::uniform_motion: return "U" + std::to_string(i + 1);
    case FieldKind::rotation: return "R" + std::to_string(i + 1) + std::to_string(j + 1);
    case FieldKind::spatial_scaling: return "S";
    case FieldKind::space_time_scaling: return "ST";
  }
  return "?";
}

FieldId parse_field(const std::string& s, int dim, Flavor fl) {
  auto digit = [&](std::size_t pos) {
    if (pos >= s.size() || s[pos] < '1' || s[pos] > '9')
      throw std::invalid_argument("unknown vector field '" + s + "'");
    return s[pos] - '1';
  };
  if (s == "dt") return FieldId::time_translation(dim, fl);
  if (s == "S") return FieldId::spatial_scaling(dim, fl);
  if (s == "ST") return FieldId::space_time_scaling(dim, fl);
  if (s.rfind("dx", 0) == 0 && s.size() == 3) return FieldId::space_translation(dim, digit(2), fl);
  if (s[0] == 'U' && s.size() == 2) return FieldId::uniform_motion(dim, digit(1), fl);
  if (s[0] == 'R' && s.size() == 3) return FieldId::rotation(dim, digit(1), digit(2), fl);
  throw std::invalid_argument("unknown vector field '" + s + "'");
}

OperatorWord::OperatorWord(std::vector<FieldId> l) : letters(std::move(l)) {
  for (const auto& z : letters) {
    validate(z);
    if (z.flavor != letters.front().flavor || z.dim != letters.front().dim)
      throw std::invalid_argument("word: letters must share flavor and dimension");
  }
}

bool OperatorWord::has_time_derivative() const {
  return std::any_of(letters.begin(), letters.end(),
                     [](const FieldId& z) { return z.has_time_derivative(); });
}

std::string OperatorWord::name() const {
  if (letters.empty()) return "1";
  std::string s;
  for (const auto& z : letters) {
    if (!s.empty()) s += ' ';
    s += z.name();
  }
  return s;
}

OperatorWord OperatorWord::prepend(const FieldId& z) const {
  std::vector<FieldId> l{z};
  l.insert(l.end(), letters.begin(), letters.end());
  return OperatorWord(std::move(l));
}

OperatorWord OperatorWord::concat(const OperatorWord& w) const {
  std::vector<FieldId> l = letters;
  l.insert(l.end(), w.letters.begin(), w.letters.end());
  return OperatorWord(std::move(l));
}

OperatorWord OperatorWord::tail() const {
  return OperatorWord(std::vector<FieldId>(letters.begin() + 1, letters.end()));
}

OperatorWord OperatorWord::as(Flavor fl) const {
  std::vector<FieldId> l;
  for (const auto& z : letters) l.push_back(z.as(fl));
  return OperatorWord(std::move(l));
}

OperatorWord parse_word(const std::string& text, int dim, Flavor fl) {
  std::string t = text;
  std::replace(t.begin(), t.end(), '*', ' ');
  std::istringstream in(t);
  std::vector<FieldId> l;
  std::string tok;
  while (in >> tok) {
    if (tok == "1") continue;
    l.push_back(parse_field(tok, dim, fl));
  }
  return OperatorWord(std::move(l));
}

std::vector<FieldId> catalogue(int dim, Flavor fl) {
  std::vector<FieldId> c;
  c.push_back(FieldId::time_translation(dim, fl));
  for (int i = 0; i < dim; ++i) c.push_back(FieldId::space_translation(dim, i, fl));
  for (int i = 0; i < dim; ++i) c.push_back(FieldId::uniform_motion(dim, i, fl));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) c.push_back(FieldId::rotation(dim, i, j, fl));
  c.push_back(FieldId::spatial_scaling(dim, fl));
  c.push_back(FieldId::space_time_scaling(dim, fl));
  return c;
}

std::vector<FieldId> restricted_catalogue(int dim, Flavor fl) {
  auto c = catalogue(dim, fl);
  std::erase_if(c, [](const FieldId& z) { return z.has_time_derivative(); });
  return c;
}

std::vector<OperatorWord> words_up_to(const std::vector<FieldId>& alphabet, int max_len) {
  std::vector<OperatorWord> all{OperatorWord()};
  std::vector<OperatorWord> layer{OperatorWord()};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<OperatorWord> next;
    for (const auto& w : layer)
      for (const auto& z : alphabet) {
        auto l = w.letters;
        l.push_back(z);
        next.emplace_back(std::move(l));
      }
    all.insert(all.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return all;
}

AffineField::AffineField(int n) : dim(n), a(1 + 2 * n, 0.0), B((1 + 2 * n) * (1 + 2 * n), 0.0) {}

AffineField AffineField::of(const FieldId& z) {
  validate(z);
  const int n = z.dim;
  AffineField f(n);
  const bool micro = z.flavor == Flavor::microscopic;
  auto X = [](int i) { return 1 + i; };
  auto V = [n](int i) { return 1 + n + i; };
  switch (z.kind) {
    case FieldKind::time_translation: f.a[0] = 1.0; break;
    case FieldKind::space_translation: f.a[X(z.i)] = 1.0; break;
    case FieldKind::uniform_motion:
      f.b(X(z.i), 0) = 1.0;
      if (micro) f.a[V(z.i)] = 1.0;
      break;
    case FieldKind::rotation:
      f.b(X(z.j), X(z.i)) = 1.0;
      f.b(X(z.i), X(z.j)) = -1.0;
      if (micro) {
        f.b(V(z.j), V(z.i)) = 1.0;
        f.b(V(z.i), V(z.j)) = -1.0;
      }
      break;
    case FieldKind::spatial_scaling:
      for (int i = 0; i < n; ++i) {
        f.b(X(i), X(i)) = 1.0;
        if (micro) f.b(V(i), V(i)) = 1.0;
      }
      break;
    case FieldKind::space_time_scaling:
      f.b(0, 0) = 1.0;
      for (int i = 0; i < n; ++i) f.b(X(i), X(i)) = 1.0;
      break;
  }
  return f;
}

AffineField AffineField::transport(int n) {
  AffineField f(n);
  f.a[0] = 1.0;
  for (int i = 0; i < n; ++i) f.b(1 + i, 1 + n + i) = 1.0;
  return f;
}

AffineField AffineField::coordinate(int n, int m) {
  AffineField f(n);
  f.a.at(m) = 1.0;
  return f;
}

AffineField AffineField::bracket(const AffineField& o) const {
  // [X, Y] with X = a + B y, Y = d + C y:  (C a - B d) + (C B - B C) y.
  const int D = this->D();
  AffineField r(dim);
  for (int m = 0; m < D; ++m) {
    double s = 0.0;
    for (int k = 0; k < D; ++k) s += o.b(m, k) * a[k] - b(m, k) * o.a[k];
    r.a[m] = s;
    for (int k = 0; k < D; ++k) {
      double c = 0.0;
      for (int l = 0; l < D; ++l) c += o.b(m, l) * b(l, k) - b(m, l) * o.b(l, k);
      r.b(m, k) = c;
    }
  }
  return r;
}

AffineField AffineField::operator+(const AffineField& o) const {
  AffineField r = *this;
  for (std::size_t k = 0; k < a.size(); ++k) r.a[k] += o.a[k];
  for (std::size_t k = 0; k < B.size(); ++k) r.B[k] += o.B[k];
  return r;
}

AffineField AffineField::operator*(double c) const {
  AffineField r = *this;
  for (double& x : r.a) x *= c;
  for (double& x : r.B) x *= c;
  return r;
}

double AffineField::max_abs() const {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  for (double x : B) m = std::max(m, std::fabs(x));
  return m;
}

std::vector<Rational> decompose(const AffineField& w, const std::vector<AffineField>& basis) {
  const int rows = w.D() + w.D() * w.D();
  const int cols = static_cast<int>(basis.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd rhs(rows);
  auto flatten = [&](const AffineField& f, auto&& put) {
    for (int k = 0; k < f.D(); ++k) put(k, f.a[k]);
    for (std::size_t k = 0; k < f.B.size(); ++k) put(f.D() + static_cast<int>(k), f.B[k]);
  };
  for (int c = 0; c < cols; ++c) flatten(basis[c], [&](int r, double x) { A(r, c) = x; });
  flatten(w, [&](int r, double x) { rhs(r) = x; });
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
  if ((A * sol - rhs).norm() > 1e-10 * (1.0 + rhs.norm()))
    throw std::domain_error("decompose: field is not in the span of the basis");
  std::vector<Rational> out;
  for (int c = 0; c < cols; ++c) out.push_back(Rational::from_double(sol(c)));
  return out;
}

FieldCombination bracket(const FieldId& a, const FieldId& b) {
  if (a.dim != b.dim || a.flavor != b.flavor)
    throw std::invalid_argument("bracket: fields differ in dimension or flavor");
  static std::mutex mu;
  static std::map<std::pair<FieldId, FieldId>, FieldCombination> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find({a, b}); it != cache.end()) return it->second;
  const auto cat = catalogue(a.dim, a.flavor);
  std::vector<AffineField> basis;
  for (const auto& z : cat) basis.push_back(AffineField::of(z));
  const auto coef = decompose(AffineField::of(a).bracket(AffineField::of(b)), basis);
  FieldCombination out;
  for (std::size_t k = 0; k < cat.size(); ++k)
    if (!coef[k].is_zero()) out.emplace_back(cat[k], coef[k]);
  cache[{a, b}] = out;
  return out;
}

TCommutator commute_with_T(const FieldId& z) {
  validate(z);
  if (z.flavor == Flavor::macroscopic && !z.is_translation() &&
      z.kind != FieldKind::space_time_scaling)
    throw std::invalid_argument("commute_with_T: macroscopic field does not commute with T");
  return z.kind == FieldKind::space_time_scaling ? TCommutator::transport : TCommutator::zero;
}

double pushdown_constant(const FieldId& z) {
  return z.kind == FieldKind::spatial_scaling ? static_cast<double>(z.dim) : 0.0;
}

double laplacian_constant(const FieldId& z) {
  return (z.kind == FieldKind::spatial_scaling || z.kind == FieldKind::space_time_scaling) ? 2.0
                                                                                             : 0.0;
}

namespace {

std::vector<std::vector<Rational>> derivative_bracket(const FieldId& z, int offset) {
  const int n = z.dim;
  const AffineField Z = AffineField::of(z);
  std::vector<std::vector<Rational>> P(n, std::vector<Rational>(n));
  for (int j = 0; j < n; ++j) {
    const AffineField c = Z.bracket(AffineField::coordinate(n, offset + j));
    for (int m = 0; m < c.D(); ++m) {
      const bool in_block = m >= offset && m < offset + n;
      for (int k = 0; k < c.D(); ++k)
        if (c.b(m, k) != 0.0) throw std::logic_error("derivative bracket is not constant");
      if (c.a[m] == 0.0) continue;
      if (!in_block) throw std::logic_error("derivative bracket leaves its block");
      P[j][m - offset] = Rational::from_double(c.a[m]);
    }
  }
  return P;
}

}  // namespace

std::vector<std::vector<Rational>> x_derivative_bracket(const FieldId& z) {
  return derivative_bracket(z, 1);
}

std::vector<std::vector<Rational>> v_derivative_bracket(const FieldId& z) {
  return derivative_bracket(z, 1 + z.dim);
}

void add_to(WordCombination& acc, const WordCombination& terms, const Rational& scale) {
  for (const auto& [w, c] : terms) {
    Rational& slot = acc[w];
    slot += c * scale;
    if (slot.is_zero()) acc.erase(w);
  }
}

WordCombination normal_order(const OperatorWord& w) {
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const FieldId& a = w.letters[k];
    const FieldId& b = w.letters[k + 1];
    if (a.order_index() <= b.order_index()) continue;
    // ... a b ... = ... b a ... + ... [a, b] ...
    WordCombination out;
    auto swapped = w.letters;
    std::swap(swapped[k], swapped[k + 1]);
    add_to(out, normal_order(OperatorWord(swapped)), Rational(1));
    for (const auto& [z, c] : bracket(a, b)) {
      std::vector<FieldId> l(w.letters.begin(), w.letters.begin() + k);
      l.push_back(z);
      l.insert(l.end(), w.letters.begin() + k + 2, w.letters.end());
      add_to(out, normal_order(OperatorWord(l)), c);
    }
    return out;
  }
  return WordCombination{{w, Rational(1)}};
}

}  // namespace kinvf
