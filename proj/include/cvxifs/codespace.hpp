#pragma once

// The code space over the map alphabet: infinite symbol streams represented
// as preamble + repeating cycle (or finite truncations), the 2^{-n} word
// metric, prepend shifts, and the canonical projection onto the attractor
// via shrinking word-image clouds.  Symbols are zero-based map indices.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cvxifs/errors.hpp"
#include "cvxifs/geometry.hpp"
#include "cvxifs/maps.hpp"
#include "cvxifs/system.hpp"

namespace cvxifs {

using Symbol = int;
using Word = std::vector<Symbol>;

class CodeStream {
 public:
  // preamble followed by cycle repeated forever
  static CodeStream periodic(Word preamble, Word cycle) {
    if (cycle.empty()) throw ValidationError("code stream: periodic form needs a non-empty cycle");
    CodeStream s;
    s.preamble_ = std::move(preamble);
    s.cycle_ = std::move(cycle);
    return s;
  }

  // finite prefix only; symbols beyond the horizon are unknown
  static CodeStream truncated(Word prefix) {
    if (prefix.empty()) throw ValidationError("code stream: truncated form needs a non-empty prefix");
    CodeStream s;
    s.preamble_ = std::move(prefix);
    return s;
  }

  bool is_periodic() const { return !cycle_.empty(); }
  long long horizon() const {
    return is_periodic() ? std::numeric_limits<long long>::max()
                         : static_cast<long long>(preamble_.size());
  }
  const Word& preamble() const { return preamble_; }
  const Word& cycle() const { return cycle_; }

  // 1-indexed
  Symbol symbol(long long k) const {
    if (k < 1) throw ValidationError("code stream: symbol positions are 1-indexed");
    const long long p = static_cast<long long>(preamble_.size());
    if (k <= p) return preamble_[static_cast<std::size_t>(k - 1)];
    if (!is_periodic())
      throw ValidationError("code stream: position " + std::to_string(k) +
                            " is beyond the declared horizon " + std::to_string(p));
    const long long c = static_cast<long long>(cycle_.size());
    return cycle_[static_cast<std::size_t>((k - p - 1) % c)];
  }

  CodeStream prepend(Symbol i) const {
    CodeStream s = *this;
    s.preamble_.insert(s.preamble_.begin(), i);
    return s;
  }

  Symbol max_symbol() const {
    Symbol m = 0;
    for (Symbol s : preamble_) m = std::max(m, s);
    for (Symbol s : cycle_) m = std::max(m, s);
    return m;
  }

 private:
  CodeStream() = default;
  Word preamble_;
  Word cycle_;  // empty = truncated form
};

inline Word prefix(const Word& w, long long m) {
  if (m < 0) throw ValidationError("prefix: m must be >= 0");
  if (m > static_cast<long long>(w.size()))
    throw ValidationError("prefix: m exceeds the word length");
  return Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(m));
}

inline Word prefix(const CodeStream& s, long long m) {
  if (m < 0) throw ValidationError("prefix: m must be >= 0");
  if (m > s.horizon())
    throw ValidationError("prefix: m exceeds the stream horizon");
  Word out;
  out.reserve(static_cast<std::size_t>(m));
  for (long long k = 1; k <= m; ++k) out.push_back(s.symbol(k));
  return out;
}

template <typename Scalar>
CodeStream shift_prepend(const IFSSystem<Scalar>& sys, Symbol i, const CodeStream& s) {
  if (i < 0 || i >= static_cast<Symbol>(sys.size()))
    throw ValidationError("shift_prepend: symbol " + std::to_string(i + 1) +
                          " does not index a system map");
  return s.prepend(i);
}

// ---------------------------------------------------------------------------
// Word metric d(a, b) = 2^{-n}, n the 1-indexed first disagreement.
// Two eventually periodic streams agree everywhere iff they agree up to
// max preamble + lcm of cycle lengths, so that comparison is exact.
// Truncated streams can only be compared up to the horizon; equality up to
// there yields the upper bound 2^{-horizon} flagged as inexact.

struct CodeDistance {
  double value;
  bool exact;  // false when truncation made equality undecidable
};

inline constexpr long long kCodeComparisonBudget = 100'000'000;

inline CodeDistance code_distance(const CodeStream& a, const CodeStream& b, long long horizon) {
  if (horizon < 1) throw ValidationError("code_distance: horizon must be >= 1");
  long long compare_to;
  bool exact_on_agreement = false;
  if (a.is_periodic() && b.is_periodic()) {
    const long long pa = static_cast<long long>(a.preamble().size());
    const long long pb = static_cast<long long>(b.preamble().size());
    const long long l = std::lcm(static_cast<long long>(a.cycle().size()),
                                 static_cast<long long>(b.cycle().size()));
    compare_to = std::max(pa, pb) + l;
    exact_on_agreement = true;
    if (compare_to > kCodeComparisonBudget)
      throw BudgetError("code_distance: cycle lengths require comparing " +
                        std::to_string(compare_to) + " symbols");
  } else {
    compare_to = std::min({horizon, a.horizon(), b.horizon()});
  }
  for (long long k = 1; k <= compare_to; ++k) {
    if (a.symbol(k) != b.symbol(k)) return {std::ldexp(1.0, static_cast<int>(-std::min<long long>(k, 1074))), true};
  }
  if (exact_on_agreement) return {0.0, true};
  return {std::ldexp(1.0, static_cast<int>(-std::min<long long>(compare_to, 1074))), false};
}

// ---------------------------------------------------------------------------
// Canonical projection.  The cloud f_{w_1} o ... o f_{w_n}(B) shrinks to the
// single point addressed by the stream; new symbols act innermost, so the
// cloud is rebuilt right-to-left with geometric depth doubling (total work
// stays O(depth * |B|)).

template <typename Scalar>
struct ProjectionResult {
  Point<Scalar> point;
  long long depth;
  Scalar residual_diam;
};

namespace detail {

template <typename Scalar>
PointCloud<Scalar> word_image(const IFSSystem<Scalar>& sys, const CodeStream& w, long long depth,
                              const PointCloud<Scalar>& b) {
  PointCloud<Scalar> cloud = b;
  for (long long k = depth; k >= 1; --k) {
    const Symbol s = w.symbol(k);
    if (s < 0 || s >= static_cast<Symbol>(sys.size()))
      throw ValidationError("project: symbol " + std::to_string(s + 1) +
                            " does not index a system map");
    cloud = apply(sys.map(s), cloud);
  }
  return cloud;
}

}  // namespace detail

template <typename Scalar>
ProjectionResult<Scalar> project(const IFSSystem<Scalar>& sys, const CodeStream& w,
                                 const PointCloud<Scalar>& b, Scalar tol,
                                 long long max_depth = 1LL << 20) {
  if (!(tol > 0)) throw ValidationError("project: tol must be positive");
  require_cloud_in_box(sys, b, "project");

  // The diameter of the word image is only a meaningful residual when the
  // basis spans the box, so the corners and the center ride along.  The
  // projected point does not depend on the basis.
  const Index d = sys.dim();
  const Index corners = Index{1} << d;
  PointCloud<Scalar> basis(b.rows() + corners + 1, d);
  basis.topRows(b.rows()) = b;
  for (Index m = 0; m < corners; ++m)
    for (Index c = 0; c < d; ++c)
      basis(b.rows() + m, c) = (m >> c) & 1 ? sys.box().hi(c) : sys.box().lo(c);
  basis.row(b.rows() + corners) = sys.box().center().transpose();

  long long depth = std::min<long long>(8, std::min(max_depth, w.horizon()));
  for (;;) {
    const PointCloud<Scalar> cloud = detail::word_image(sys, w, depth, basis);
    const Scalar diam = diameter(cloud);
    if (diam <= tol) {
      Point<Scalar> pt = cloud.row(0).transpose();
      if (w.is_periodic()) {
        // Polish: the addressed point is f_preamble(fixed point of the cycle
        // composite), which Picard iteration nails to machine precision.
        // Kept only when it agrees with the cloud within the residual.
        try {
          const auto cyc = compose_word(sys.maps(), w.cycle());
          Point<Scalar> q = sys.box().center();
          Point<Scalar> fq = eval(cyc, q);
          for (int t = 0; t < 4096 && (fq.array() != q.array()).any(); ++t) {
            q = fq;
            fq = eval(cyc, q);
          }
          for (auto it = w.preamble().rbegin(); it != w.preamble().rend(); ++it)
            q = eval(sys.map(*it), q);
          const Scalar slack = Scalar(4e-16) * std::max<Scalar>(1, sys.box().max_extent());
          if (dist(q, pt) <= diam + slack) pt = q;
        } catch (const Error&) {
          // cloud point stands
        }
      }
      return {pt, depth, diam};
    }
    if (depth >= max_depth || depth >= w.horizon())
      throw ConvergenceError("project: word-image diameter " +
                                 std::to_string(static_cast<double>(diam)) +
                                 " above tol at depth " + std::to_string(depth),
                             depth, static_cast<double>(diam), cloud.template cast<double>());
    depth = std::min({depth * 2, max_depth, w.horizon()});
  }
}

// Image of a cloud (typically a computed attractor) under a finite word.
template <typename Scalar>
PointCloud<Scalar> cylinder(const IFSSystem<Scalar>& sys, const Word& w,
                            const PointCloud<Scalar>& a) {
  if (w.empty()) throw ValidationError("cylinder: word must be non-empty");
  require_cloud_in_box(sys, a, "cylinder");
  return apply(compose_word(sys.maps(), w), a);
}

// ---------------------------------------------------------------------------
// Equivariance of the projection: pi(i w) = f_i(pi(w)) for every symbol i.

template <typename Scalar>
struct EquivarianceReport {
  Scalar max_error = 0;
  std::size_t argmax_stream = 0;
  Symbol argmax_symbol = 0;
  bool pass = true;
};

template <typename Scalar>
EquivarianceReport<Scalar> check_equivariance(const IFSSystem<Scalar>& sys,
                                              const std::vector<CodeStream>& streams,
                                              const PointCloud<Scalar>& b, Scalar tol) {
  if (streams.empty()) throw ValidationError("check_equivariance: need at least one stream");
  const Scalar proj_tol = std::max(tol / 100, Scalar(1e-13));
  EquivarianceReport<Scalar> rep;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    const auto base = project(sys, streams[k], b, proj_tol);
    for (Symbol i = 0; i < static_cast<Symbol>(sys.size()); ++i) {
      const auto shifted = project(sys, streams[k].prepend(i), b, proj_tol);
      const Scalar err = dist(shifted.point, eval(sys.map(i), base.point));
      if (err > rep.max_error) {
        rep.max_error = err;
        rep.argmax_stream = k;
        rep.argmax_symbol = i;
      }
    }
  }
  rep.pass = rep.max_error <= tol;
  return rep;
}

// Convenience: projection basis defaults to the box center.
template <typename Scalar>
EquivarianceReport<Scalar> check_equivariance(const IFSSystem<Scalar>& sys,
                                              const std::vector<CodeStream>& streams, Scalar tol) {
  PointCloud<Scalar> b(1, sys.dim());
  b.row(0) = sys.box().center().transpose();
  return check_equivariance(sys, streams, b, tol);
}

// ---------------------------------------------------------------------------
// Quantitative continuity: streams agreeing on an n-prefix project into the
// same depth-n cylinder, so sup over length-n words of the cylinder diameter
// is a modulus of continuity for the projection.  Exhaustive enumeration,
// prepend-incremental (extending a word on the left applies one more map).

template <typename Scalar>
std::vector<Scalar> continuity_modulus_profile(const IFSSystem<Scalar>& sys,
                                               const PointCloud<Scalar>& a, int n) {
  if (n < 1) throw ValidationError("continuity_modulus: n must be >= 1");
  require_cloud_in_box(sys, a, "continuity_modulus");
  diagnostics_check_budget<Scalar>(sys.size(), n);
  std::vector<Scalar> level_max(static_cast<std::size_t>(n), Scalar(0));
  struct Frame {
    PointCloud<Scalar> cloud;
    int depth;
  };
  std::vector<Frame> stack;
  stack.push_back({a, 0});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth > 0)
      level_max[static_cast<std::size_t>(f.depth - 1)] =
          std::max(level_max[static_cast<std::size_t>(f.depth - 1)], diameter(f.cloud));
    if (f.depth == n) continue;
    for (Index i = 0; i < sys.size(); ++i)
      stack.push_back({apply(sys.map(i), f.cloud), f.depth + 1});
  }
  return level_max;
}

template <typename Scalar>
Scalar continuity_modulus(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& a, int n) {
  return continuity_modulus_profile(sys, a, n).back();
}

// ---------------------------------------------------------------------------
// Textual stream format: "preamble|cycle" with 1-based digit symbols,
// e.g. "1|2" is 1222..., "|12" is 121212...; a bare digit string is a
// truncated stream.  Alphabets beyond 9 maps need the library API.

inline CodeStream parse_stream(const std::string& text, Index alphabet) {
  const auto parse_digits = [&](const std::string& part) {
    Word w;
    for (char ch : part) {
      if (ch < '1' || ch > '9')
        throw ParseError("stream symbols must be digits 1-9", part);
      const Symbol s = ch - '1';
      if (s >= static_cast<Symbol>(alphabet))
        throw ParseError("symbol " + std::string(1, ch) + " exceeds the map count", part);
      w.push_back(s);
    }
    return w;
  };
  const auto bar = text.find('|');
  if (bar == std::string::npos) {
    if (text.empty()) throw ParseError("empty stream", text);
    return CodeStream::truncated(parse_digits(text));
  }
  Word pre = parse_digits(text.substr(0, bar));
  Word cyc = parse_digits(text.substr(bar + 1));
  if (cyc.empty()) throw ParseError("periodic stream needs a non-empty cycle", text);
  return CodeStream::periodic(std::move(pre), std::move(cyc));
}

inline std::string format_stream(const CodeStream& s) {
  std::string out;
  for (Symbol x : s.preamble()) out += static_cast<char>('1' + x);
  if (s.is_periodic()) {
    out += '|';
    for (Symbol x : s.cycle()) out += static_cast<char>('1' + x);
  }
  return out;
}

}  // namespace cvxifs
