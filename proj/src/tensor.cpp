#include "nullwave/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nullwave {

namespace {

constexpr int kMaxFamilies = 16;

int permutation_multiplicity(const std::array<int, 3>& sorted_mon) {
  const auto [a, b, g] = sorted_mon;
  if (a == b && b == g) return 1;
  if (a == b || b == g) return 3;
  return 6;
}

int levi_civita(int l, int m, int n) {
  if (l < 1 || m < 1 || n < 1) return 0;
  if (l == m || m == n || l == n) return 0;
  if ((l == 1 && m == 2 && n == 3) || (l == 2 && m == 3 && n == 1) ||
      (l == 3 && m == 1 && n == 2)) {
    return 1;
  }
  return -1;
}

// Exact solve of a (possibly overdetermined) system a x = b. Returns a
// solution iff the system is consistent.
std::optional<std::vector<Rational>> solve_exact(
    std::vector<std::array<Rational, 4>> a, std::vector<Rational> b,
    int cols) {
  const int rows = static_cast<int>(a.size());
  std::vector<int> pivot_col_of_row;
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int pivot = -1;
    for (int r = rank; r < rows; ++r) {
      if (a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(a[static_cast<std::size_t>(rank)], a[static_cast<std::size_t>(pivot)]);
    std::swap(b[static_cast<std::size_t>(rank)], b[static_cast<std::size_t>(pivot)]);
    const Rational inv = a[static_cast<std::size_t>(rank)][static_cast<std::size_t>(col)];
    for (int r = 0; r < rows; ++r) {
      if (r == rank) continue;
      const Rational f =
          a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / inv;
      if (f == 0) continue;
      for (int c2 = col; c2 < cols; ++c2) {
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c2)] -=
            f * a[static_cast<std::size_t>(rank)][static_cast<std::size_t>(c2)];
      }
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(rank)];
    }
    pivot_col_of_row.push_back(col);
    ++rank;
  }
  for (int r = rank; r < rows; ++r) {
    if (b[static_cast<std::size_t>(r)] != 0) return std::nullopt;
  }
  std::vector<Rational> x(static_cast<std::size_t>(cols), Rational(0));
  for (int r = 0; r < rank; ++r) {
    const int col = pivot_col_of_row[static_cast<std::size_t>(r)];
    x[static_cast<std::size_t>(col)] =
        b[static_cast<std::size_t>(r)] /
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
  }
  return x;
}

// Columns of the map L -> coefficients of L * (X0^2 - c^2 |X'|^2).
std::vector<std::array<Rational, 4>> cone_matrix(const Rational& speed) {
  const Rational c2 = speed * speed;
  std::vector<std::array<Rational, 4>> a(
      static_cast<std::size_t>(CubicForm::kMonomialCount));
  for (int mu = 0; mu < 4; ++mu) {
    {
      std::array<int, 3> mon{mu, 0, 0};
      std::sort(mon.begin(), mon.end());
      a[static_cast<std::size_t>(CubicForm::monomial_index(mon[0], mon[1], mon[2]))]
       [static_cast<std::size_t>(mu)] += 1;
    }
    for (int l = 1; l <= 3; ++l) {
      std::array<int, 3> mon{mu, l, l};
      std::sort(mon.begin(), mon.end());
      a[static_cast<std::size_t>(CubicForm::monomial_index(mon[0], mon[1], mon[2]))]
       [static_cast<std::size_t>(mu)] -= c2;
    }
  }
  return a;
}

std::optional<std::array<Rational, 4>> divide_by_cone(const CubicForm& q,
                                                      const Rational& speed) {
  auto a = cone_matrix(speed);
  std::vector<Rational> b(static_cast<std::size_t>(CubicForm::kMonomialCount));
  for (int mon = 0; mon < CubicForm::kMonomialCount; ++mon) {
    b[static_cast<std::size_t>(mon)] = q.coeff(mon);
  }
  auto x = solve_exact(std::move(a), std::move(b), 4);
  if (!x) return std::nullopt;
  return std::array<Rational, 4>{(*x)[0], (*x)[1], (*x)[2], (*x)[3]};
}

// Deterministic scan of both cone sheets for the largest |q|.
NullWitness scan_cone_for_witness(const CubicForm& q, int k, double speed,
                                  int directions = 2048) {
  NullWitness best;
  best.k = k;
  double best_abs = -1.0;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int sheet = 0; sheet < 2; ++sheet) {
    const double x0 = sheet == 0 ? speed : -speed;
    for (int i = 0; i < directions; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / directions;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      const std::array<double, 4> x{x0, rho * std::cos(phi),
                                    rho * std::sin(phi), z};
      const double v = q.eval(x);
      if (std::fabs(v) > best_abs) {
        best_abs = std::fabs(v);
        best.x = x;
        best.value = v;
      }
    }
  }
  return best;
}

}  // namespace

const char* gamma_name(Gamma g) {
  switch (g) {
    case Gamma::Dt: return "dt";
    case Gamma::Dx1: return "dx1";
    case Gamma::Dx2: return "dx2";
    case Gamma::Dx3: return "dx3";
    case Gamma::Omega1: return "omega1";
    case Gamma::Omega2: return "omega2";
    case Gamma::Omega3: return "omega3";
    case Gamma::Scaling: return "scaling";
  }
  return "?";
}

SpeedVector::SpeedVector(std::vector<Rational> speeds) : c_(std::move(speeds)) {
  if (c_.empty()) throw std::invalid_argument("speeds: empty");
  for (std::size_t k = 0; k < c_.size(); ++k) {
    if (c_[k] <= 0) {
      throw std::invalid_argument("speeds: c_" + std::to_string(k + 1) +
                                  " must be positive");
    }
    if (k > 0 && c_[k] > c_[k - 1]) {
      throw std::invalid_argument("speeds: must be non-increasing");
    }
  }
}

SpeedVector SpeedVector::from_doubles(const std::vector<double>& speeds) {
  std::vector<Rational> r;
  r.reserve(speeds.size());
  for (double s : speeds) r.emplace_back(s);
  return SpeedVector(std::move(r));
}

double SpeedVector::speed_double(int k) const {
  return to_double(c_[static_cast<std::size_t>(k)]);
}

double SpeedVector::c0() const {
  Rational m = c_.front();
  for (const auto& s : c_) m = std::min(m, s);
  return to_double(m) / 2.0;
}

bool SpeedVector::strictly_decreasing() const {
  for (std::size_t k = 1; k < c_.size(); ++k) {
    if (c_[k] >= c_[k - 1]) return false;
  }
  return true;
}

std::vector<std::vector<int>> SpeedVector::equal_speed_groups() const {
  std::vector<std::vector<int>> groups;
  for (int k = 0; k < size(); ++k) {
    if (!groups.empty() &&
        c_[static_cast<std::size_t>(k)] ==
            c_[static_cast<std::size_t>(groups.back().front())]) {
      groups.back().push_back(k);
    } else {
      groups.push_back({k});
    }
  }
  return groups;
}

CoeffTensor::CoeffTensor(int m) : m_(m) {
  if (m < 1 || m > kMaxFamilies) {
    throw std::invalid_argument("CoeffTensor: family count out of range");
  }
  e_.resize(static_cast<std::size_t>(m) * m * m * 64);
}

std::size_t CoeffTensor::index(int i, int j, int k, int a, int b, int g) const {
  if (i < 0 || i >= m_ || j < 0 || j >= m_ || k < 0 || k >= m_ || a < 0 ||
      a > 3 || b < 0 || b > 3 || g < 0 || g > 3) {
    throw std::out_of_range("CoeffTensor: index out of range");
  }
  return ((((static_cast<std::size_t>(i) * m_ + j) * m_ + k) * 4 + a) * 4 + b) *
             4 +
         g;
}

const Rational& CoeffTensor::at(int i, int j, int k, int a, int b, int g) const {
  return e_[index(i, j, k, a, b, g)];
}

void CoeffTensor::set(int i, int j, int k, int a, int b, int g, Rational value) {
  e_[index(i, j, k, a, b, g)] = std::move(value);
}

bool CoeffTensor::is_zero() const {
  return std::all_of(e_.begin(), e_.end(),
                     [](const Rational& r) { return r == 0; });
}

double CoeffTensor::frobenius_norm() const {
  double s = 0.0;
  for (const auto& r : e_) {
    const double v = to_double(r);
    s += v * v;
  }
  return std::sqrt(s);
}

CoeffTensor CoeffTensor::scaled(const Rational& factor) const {
  CoeffTensor out(m_);
  for (std::size_t n = 0; n < e_.size(); ++n) out.e_[n] = e_[n] * factor;
  return out;
}

CoeffTensor CoeffTensor::plus(const CoeffTensor& other) const {
  if (other.m_ != m_) throw std::invalid_argument("CoeffTensor: size mismatch");
  CoeffTensor out(m_);
  for (std::size_t n = 0; n < e_.size(); ++n) out.e_[n] = e_[n] + other.e_[n];
  return out;
}

std::vector<CoeffTensor::Entry> CoeffTensor::nonzero_entries() const {
  std::vector<Entry> out;
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int g = 0; g < 4; ++g) {
              const Rational& v = at(i, j, k, a, b, g);
              if (v != 0) out.push_back({i, j, k, a, b, g, v});
            }
  return out;
}

std::string format_index_tuple(const IndexTuple& t) {
  std::ostringstream os;
  os << "(" << t.i << "," << t.j << "," << t.k << "," << t.a << "," << t.b
     << "," << t.g << ")";
  return os.str();
}

SymmetryReport check_symmetry(const CoeffTensor& c) {
  const int m = c.families();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int g = 0; g < 4; ++g) {
              const Rational& v = c.at(i, j, k, a, b, g);
              if (v != c.at(i, k, j, a, b, g) || v != c.at(i, j, k, a, g, b)) {
                return {false, IndexTuple{i + 1, j + 1, k + 1, a, b, g}};
              }
            }
  return {true, std::nullopt};
}

const std::array<std::array<int, 3>, CubicForm::kMonomialCount>&
CubicForm::monomials() {
  static const auto table = [] {
    std::array<std::array<int, 3>, kMonomialCount> t{};
    int n = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b)
        for (int g = b; g < 4; ++g) t[static_cast<std::size_t>(n++)] = {a, b, g};
    return t;
  }();
  return table;
}

int CubicForm::monomial_index(int a, int b, int g) {
  static const auto lookup = [] {
    std::array<int, 64> t{};
    t.fill(-1);
    const auto& mons = monomials();
    for (int n = 0; n < kMonomialCount; ++n) {
      const auto& m = mons[static_cast<std::size_t>(n)];
      t[static_cast<std::size_t>((m[0] * 4 + m[1]) * 4 + m[2])] = n;
    }
    return t;
  }();
  std::array<int, 3> s{a, b, g};
  std::sort(s.begin(), s.end());
  const int idx = lookup[static_cast<std::size_t>((s[0] * 4 + s[1]) * 4 + s[2])];
  if (idx < 0) throw std::out_of_range("CubicForm: bad monomial");
  return idx;
}

bool CubicForm::is_zero() const {
  return std::all_of(c_.begin(), c_.end(),
                     [](const Rational& r) { return r == 0; });
}

Rational CubicForm::max_abs_coeff() const {
  Rational m(0);
  for (const auto& r : c_) {
    Rational a(abs(r));
    if (a > m) m = std::move(a);
  }
  return m;
}

Rational CubicForm::eval_exact(const std::array<Rational, 4>& x) const {
  Rational s(0);
  const auto& mons = monomials();
  for (int n = 0; n < kMonomialCount; ++n) {
    const auto& m = mons[static_cast<std::size_t>(n)];
    s += c_[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(m[0])] *
         x[static_cast<std::size_t>(m[1])] * x[static_cast<std::size_t>(m[2])];
  }
  return s;
}

double CubicForm::eval(const std::array<double, 4>& x) const {
  double s = 0.0;
  const auto& mons = monomials();
  for (int n = 0; n < kMonomialCount; ++n) {
    const Rational& r = c_[static_cast<std::size_t>(n)];
    if (r == 0) continue;
    const auto& m = mons[static_cast<std::size_t>(n)];
    s += to_double(r) * x[static_cast<std::size_t>(m[0])] *
         x[static_cast<std::size_t>(m[1])] * x[static_cast<std::size_t>(m[2])];
  }
  return s;
}

CubicForm block_cubic(const CoeffTensor& c, int i, int j, int k) {
  CubicForm q;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int g = 0; g < 4; ++g) {
        const Rational& v = c.at(i, j, k, a, b, g);
        if (v != 0) q.coeff(CubicForm::monomial_index(a, b, g)) += v;
      }
  return q;
}

CubicForm self_cubic(const CoeffTensor& c, int k) {
  return block_cubic(c, k, k, k);
}

double NullWitness::cone_residual(double c) const {
  const double space = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
  const double q = x[0] * x[0] - c * c * space;
  const double scale = x[0] * x[0] + c * c * space;
  return scale > 0 ? std::fabs(q) / scale : std::fabs(q);
}

double NullWitness::cone_residual() const { return cone_residual(1.0); }

NullCheckResult check_null(const CoeffTensor& c, const SpeedVector& speeds) {
  if (speeds.size() != c.families()) {
    throw std::invalid_argument("check_null: speed count != families");
  }
  NullCheckResult out;
  out.all_null = true;
  out.null_per_family.resize(static_cast<std::size_t>(c.families()));
  out.linear_factor.resize(static_cast<std::size_t>(c.families()));
  for (int k = 0; k < c.families(); ++k) {
    const CubicForm q = self_cubic(c, k);
    auto factor = divide_by_cone(q, speeds.speed(k));
    out.null_per_family[static_cast<std::size_t>(k)] = factor.has_value();
    if (factor) {
      out.linear_factor[static_cast<std::size_t>(k)] = *factor;
    } else {
      out.all_null = false;
      if (!out.witness) {
        out.witness = scan_cone_for_witness(q, k, speeds.speed_double(k));
      }
    }
  }
  return out;
}

ExtendedNullCheckResult check_null_extended(
    const CoeffTensor& c, const SpeedVector& speeds,
    const std::vector<std::vector<int>>& groups) {
  if (speeds.size() != c.families()) {
    throw std::invalid_argument("check_null_extended: speed count != families");
  }
  // The partition must list each family exactly once and match speed ties.
  std::set<int> seen;
  for (const auto& group : groups) {
    if (group.empty()) {
      throw std::invalid_argument("check_null_extended: empty group");
    }
    for (int k : group) {
      if (k < 0 || k >= c.families() || !seen.insert(k).second) {
        throw std::invalid_argument("check_null_extended: bad partition");
      }
      if (speeds.speed(k) != speeds.speed(group.front())) {
        throw std::invalid_argument(
            "check_null_extended: group mixes distinct speeds");
      }
    }
  }
  if (static_cast<int>(seen.size()) != c.families()) {
    throw std::invalid_argument("check_null_extended: partition incomplete");
  }
  for (std::size_t p = 0; p < groups.size(); ++p) {
    for (std::size_t q = p + 1; q < groups.size(); ++q) {
      if (speeds.speed(groups[p].front()) == speeds.speed(groups[q].front())) {
        throw std::invalid_argument(
            "check_null_extended: equal speeds split across groups");
      }
    }
  }

  ExtendedNullCheckResult out;
  out.all_null = true;
  for (const auto& group : groups) {
    for (int i : group)
      for (int j : group)
        for (int k : group) {
          const CubicForm q = block_cubic(c, i, j, k);
          if (!divide_by_cone(q, speeds.speed(group.front()))) {
            out.all_null = false;
            out.failing_triples.push_back(
                IndexTuple{i + 1, j + 1, k + 1, 0, 0, 0});
            if (!out.witness) {
              out.witness = scan_cone_for_witness(
                  q, k, speeds.speed_double(group.front()));
            }
          }
        }
  }
  return out;
}

CoeffTensor commutator(const CoeffTensor& c, Gamma field) {
  const int m = c.families();
  if (field == Gamma::Dt || field == Gamma::Dx1 || field == Gamma::Dx2 ||
      field == Gamma::Dx3) {
    return CoeffTensor(m);
  }
  if (field == Gamma::Scaling) {
    return c.scaled(Rational(-3));
  }
  const int lambda = static_cast<int>(field) - static_cast<int>(Gamma::Omega1) + 1;
  CoeffTensor out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int g = 0; g < 4; ++g) {
              Rational v(0);
              for (int nu = 1; nu <= 3; ++nu) {
                if (const int e = levi_civita(lambda, g, nu)) {
                  v += c.at(i, j, k, a, b, nu) * e;
                }
                if (const int e = levi_civita(lambda, a, nu)) {
                  v += c.at(i, j, k, nu, b, g) * e;
                }
                if (const int e = levi_civita(lambda, b, nu)) {
                  v += c.at(i, j, k, a, nu, g) * e;
                }
              }
              if (v != 0) out.set(i, j, k, a, b, g, std::move(v));
            }
  return out;
}

CoeffTensor iterated_commutators(const CoeffTensor& c, std::span<const Gamma> d,
                                 int max_length) {
  if (static_cast<int>(d.size()) > max_length) {
    throw std::invalid_argument("iterated_commutators: sequence too long");
  }
  CoeffTensor out = c;
  for (Gamma g : d) out = commutator(out, g);
  return out;
}

std::vector<double> evaluate_nonlinearity(const CoeffTensor& c,
                                          std::span<const double> grad_u,
                                          std::span<const double> hess_v) {
  const int m = c.families();
  if (grad_u.size() != static_cast<std::size_t>(m) * 4 ||
      hess_v.size() != static_cast<std::size_t>(m) * 16) {
    throw std::invalid_argument("evaluate_nonlinearity: bad field sizes");
  }
  double hmax = 0.0;
  for (double h : hess_v) hmax = std::max(hmax, std::fabs(h));
  for (int j = 0; j < m; ++j)
    for (int b = 0; b < 4; ++b)
      for (int g = b + 1; g < 4; ++g) {
        const double h1 = hess_v[static_cast<std::size_t>(j * 16 + b * 4 + g)];
        const double h2 = hess_v[static_cast<std::size_t>(j * 16 + g * 4 + b)];
        if (std::fabs(h1 - h2) > 1e-10 * std::max(1.0, hmax)) {
          throw std::invalid_argument(
              "evaluate_nonlinearity: hessian not symmetric");
        }
      }
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (const auto& e : c.nonzero_entries()) {
    out[static_cast<std::size_t>(e.k)] +=
        to_double(e.value) * grad_u[static_cast<std::size_t>(e.i * 4 + e.a)] *
        hess_v[static_cast<std::size_t>(e.j * 16 + e.b * 4 + e.g)];
  }
  return out;
}

CoeffTensor project_to_null(const CoeffTensor& c, const SpeedVector& speeds) {
  if (speeds.size() != c.families()) {
    throw std::invalid_argument("project_to_null: speed count != families");
  }
  CoeffTensor out = c;
  for (int k = 0; k < c.families(); ++k) {
    const CubicForm q = self_cubic(c, k);
    const auto a = cone_matrix(speeds.speed(k));
    // Normal equations of the coefficient least-squares problem.
    std::vector<std::array<Rational, 4>> ata(4);
    std::vector<Rational> atq(4, Rational(0));
    for (int r = 0; r < 4; ++r)
      for (int s = 0; s < 4; ++s) {
        Rational v(0);
        for (int mon = 0; mon < CubicForm::kMonomialCount; ++mon) {
          v += a[static_cast<std::size_t>(mon)][static_cast<std::size_t>(r)] *
               a[static_cast<std::size_t>(mon)][static_cast<std::size_t>(s)];
        }
        ata[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] = v;
      }
    for (int r = 0; r < 4; ++r) {
      Rational v(0);
      for (int mon = 0; mon < CubicForm::kMonomialCount; ++mon) {
        v += a[static_cast<std::size_t>(mon)][static_cast<std::size_t>(r)] *
             q.coeff(mon);
      }
      atq[static_cast<std::size_t>(r)] = v;
    }
    const auto ell = solve_exact(std::move(ata), std::move(atq), 4);
    if (!ell) throw std::logic_error("project_to_null: singular normal system");
    // Residual (the part outside the ideal), removed slot-symmetrically.
    for (int mon = 0; mon < CubicForm::kMonomialCount; ++mon) {
      Rational fitted(0);
      for (int r = 0; r < 4; ++r) {
        fitted += a[static_cast<std::size_t>(mon)][static_cast<std::size_t>(r)] *
                  (*ell)[static_cast<std::size_t>(r)];
      }
      const Rational delta = q.coeff(mon) - fitted;
      if (delta == 0) continue;
      const auto& mdef = CubicForm::monomials()[static_cast<std::size_t>(mon)];
      const Rational share =
          delta / permutation_multiplicity(mdef);
      std::array<int, 3> perm = mdef;
      std::sort(perm.begin(), perm.end());
      std::set<std::array<int, 3>> distinct;
      do {
        distinct.insert(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
      for (const auto& p : distinct) {
        out.set(k, k, k, p[0], p[1], p[2],
                out.at(k, k, k, p[0], p[1], p[2]) - share);
      }
    }
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line,
                             const std::string& message) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + message);
}

}  // namespace

TensorFile parse_tensor_text(std::istream& in, const std::string& origin) {
  int m = -1;
  std::optional<std::vector<Rational>> speeds;
  std::optional<CoeffTensor> tensor;
  std::set<std::array<int, 6>> seen;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;

    if (first == "m") {
      if (m >= 0) parse_fail(origin, lineno, "duplicate m");
      if (!(ls >> m) || m < 1 || m > kMaxFamilies) {
        parse_fail(origin, lineno, "m must be an integer in [1, 16]");
      }
      tensor.emplace(m);
      continue;
    }
    if (first == "speeds") {
      if (m < 0) parse_fail(origin, lineno, "speeds before m");
      if (speeds) parse_fail(origin, lineno, "duplicate speeds");
      std::vector<Rational> s;
      std::string tok;
      while (ls >> tok) {
        auto r = parse_rational(tok);
        if (!r) parse_fail(origin, lineno, "bad speed value '" + tok + "'");
        s.push_back(*r);
      }
      if (static_cast<int>(s.size()) != m) {
        parse_fail(origin, lineno, "expected " + std::to_string(m) + " speeds");
      }
      speeds = std::move(s);
      continue;
    }

    if (m < 0 || !speeds) {
      parse_fail(origin, lineno, "entries must follow m and speeds");
    }
    std::istringstream es(line);
    int i, j, k, a, b, g;
    std::string val;
    if (!(es >> i >> j >> k >> a >> b >> g >> val)) {
      parse_fail(origin, lineno, "expected 'i j k alpha beta gamma value'");
    }
    std::string extra;
    if (es >> extra) parse_fail(origin, lineno, "trailing tokens");
    if (i < 1 || i > m || j < 1 || j > m || k < 1 || k > m) {
      parse_fail(origin, lineno, "family index out of range");
    }
    if (a < 0 || a > 3 || b < 0 || b > 3 || g < 0 || g > 3) {
      parse_fail(origin, lineno, "derivative slot out of range");
    }
    if (!seen.insert({i, j, k, a, b, g}).second) {
      parse_fail(origin, lineno, "duplicate entry");
    }
    auto r = parse_rational(val);
    if (!r) parse_fail(origin, lineno, "bad value '" + val + "'");
    tensor->set(i - 1, j - 1, k - 1, a, b, g, *r);
  }
  if (m < 0) throw std::runtime_error(origin + ": missing 'm'");
  if (!speeds) throw std::runtime_error(origin + ": missing 'speeds'");
  try {
    return TensorFile{std::move(*tensor), SpeedVector(std::move(*speeds))};
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
}

TensorFile load_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return parse_tensor_text(in, path);
}

void save_tensor_file(const std::string& path, const CoeffTensor& c,
                      const SpeedVector& speeds, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "m " << c.families() << "\n";
  out << "speeds";
  for (int k = 0; k < speeds.size(); ++k) {
    out << " " << format_rational(speeds.speed(k));
  }
  out << "\n";
  for (const auto& e : c.nonzero_entries()) {
    out << e.i + 1 << " " << e.j + 1 << " " << e.k + 1 << " " << e.a << " "
        << e.b << " " << e.g << " " << format_rational(e.value) << "\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace nullwave
