#pragma once

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kinvf/rational.hpp"

namespace kinvf {

// Catalogue order: time translation, space translations, uniform motions,
// rotations, spatial scaling, space-time scaling.
enum class FieldKind {
  time_translation,
  space_translation,
  uniform_motion,
  rotation,
  spatial_scaling,
  space_time_scaling
};

// Macroscopic fields act on functions of (t, x), microscopic ones on (t, x, v).
enum class Flavor { macroscopic, microscopic };

// Indices are 0-based; rotations use i < j. Microscopic forms:
//   uniform motion  t d/dx^i + d/dv^i
//   rotation        x^i d/dx^j - x^j d/dx^i + v^i d/dv^j - v^j d/dv^i
//   scaling         x.d/dx + v.d/dv
//   space-time      t d/dt + x.d/dx   (same in both flavors)
struct FieldId {
  FieldKind kind = FieldKind::space_translation;
  int i = 0;
  int j = 0;
  Flavor flavor = Flavor::microscopic;
  int dim = 1;

  static FieldId time_translation(int dim, Flavor fl = Flavor::microscopic);
  static FieldId space_translation(int dim, int i, Flavor fl = Flavor::microscopic);
  static FieldId uniform_motion(int dim, int i, Flavor fl = Flavor::microscopic);
  static FieldId rotation(int dim, int i, int j, Flavor fl = Flavor::microscopic);
  static FieldId spatial_scaling(int dim, Flavor fl = Flavor::microscopic);
  static FieldId space_time_scaling(int dim, Flavor fl = Flavor::microscopic);

  bool has_time_derivative() const {
    return kind == FieldKind::time_translation || kind == FieldKind::space_time_scaling;
  }
  bool is_translation() const {
    return kind == FieldKind::time_translation || kind == FieldKind::space_translation;
  }
  int order_index() const;
  // Flavor-independent short name: dt, dx1, U1, R12, S, ST.
  std::string name() const;
  FieldId as(Flavor fl) const {
    FieldId z = *this;
    z.flavor = fl;
    return z;
  }

  friend bool operator==(const FieldId& a, const FieldId& b) {
    return a.dim == b.dim && a.flavor == b.flavor && a.order_index() == b.order_index();
  }
  friend std::strong_ordering operator<=>(const FieldId& a, const FieldId& b) {
    if (auto c = a.dim <=> b.dim; c != 0) return c;
    if (auto c = a.flavor <=> b.flavor; c != 0) return c;
    return a.order_index() <=> b.order_index();
  }
};

void validate(const FieldId& z);
FieldId parse_field(const std::string& name, int dim, Flavor fl);

// letters[0] is the outermost operator: (Z1 Z2 ... Zk) f = Z1(Z2(...Zk(f))).
struct OperatorWord {
  std::vector<FieldId> letters;

  OperatorWord() = default;
  explicit OperatorWord(std::vector<FieldId> l);
  OperatorWord(std::initializer_list<FieldId> l) : OperatorWord(std::vector<FieldId>(l)) {}

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  bool has_time_derivative() const;
  // Space-separated letter names; "1" for the empty word.
  std::string name() const;
  OperatorWord prepend(const FieldId& z) const;
  OperatorWord concat(const OperatorWord& w) const;
  OperatorWord tail() const;
  OperatorWord as(Flavor fl) const;

  friend bool operator==(const OperatorWord&, const OperatorWord&) = default;
  friend auto operator<=>(const OperatorWord& a, const OperatorWord& b) {
    if (auto c = a.letters.size() <=> b.letters.size(); c != 0) return c;
    return a.letters <=> b.letters;
  }
};

// Letters separated by spaces or '*'; "" or "1" is the empty word.
OperatorWord parse_word(const std::string& text, int dim, Flavor fl);

std::vector<FieldId> catalogue(int dim, Flavor fl);
// Without the time translation and the space-time scaling.
std::vector<FieldId> restricted_catalogue(int dim, Flavor fl);
// All words of length <= max_len, shortest first, lexicographic within a length.
std::vector<OperatorWord> words_up_to(const std::vector<FieldId>& alphabet, int max_len);

// Vector field on coordinates y = (t, x^1..x^n, v^1..v^n) whose coefficient
// along d/dy^m is a[m] + sum_k B[m][k] y^k.
struct AffineField {
  int dim = 1;
  std::vector<double> a;
  std::vector<double> B;  // row-major D x D

  explicit AffineField(int dim);
  static AffineField of(const FieldId& z);
  // d/dt + v.d/dx
  static AffineField transport(int dim);
  static AffineField coordinate(int dim, int m);

  int D() const { return 1 + 2 * dim; }
  double& b(int m, int k) { return B[m * D() + k]; }
  double b(int m, int k) const { return B[m * D() + k]; }

  AffineField bracket(const AffineField& o) const;
  AffineField operator+(const AffineField& o) const;
  AffineField operator*(double c) const;
  double max_abs() const;
};

// Coefficients of w in the given basis; throws std::domain_error if w is not in the span.
std::vector<Rational> decompose(const AffineField& w, const std::vector<AffineField>& basis);

using FieldCombination = std::vector<std::pair<FieldId, Rational>>;
using WordCombination = std::map<OperatorWord, Rational>;

// [a, b] expanded over the catalogue of the same flavor (structure constants).
FieldCombination bracket(const FieldId& a, const FieldId& b);

enum class TCommutator { zero, transport };
// [T, Z] for microscopic fields and translations.
TCommutator commute_with_T(const FieldId& z);

// c_Z in  Z rho(f) = rho(Z f) + c_Z rho(f).
double pushdown_constant(const FieldId& z);
// d_Z in  Delta Z psi = Z Delta psi + d_Z Delta psi.
double laplacian_constant(const FieldId& z);

// [Z, d/dx^j] = sum_m P[j][m] d/dx^m and [Z, d/dv^j] = sum_m Q[j][m] d/dv^m.
std::vector<std::vector<Rational>> x_derivative_bracket(const FieldId& z);
std::vector<std::vector<Rational>> v_derivative_bracket(const FieldId& z);

// Rewrites a word as a combination of words whose letters are in catalogue order.
WordCombination normal_order(const OperatorWord& w);
void add_to(WordCombination& acc, const WordCombination& terms, const Rational& scale);

}  // namespace kinvf
