#pragma once

#include "convexa/subspace.hpp"

namespace convexa::lp {

struct Solution {
  Vec x;
  double objective = 0.0;
  long iterations = 0;
};

/// Dense two-phase simplex for  minimize c^T x  s.t.  A x = b, x >= 0.
/// Dantzig pricing with a switch to Bland's rule on degenerate streaks; the
/// final basic solution is re-solved with a pivoted LU for accuracy.
/// Throws NumericError on infeasibility, unboundedness or the iteration cap.
Solution solve_standard_form(const Mat& a, const Vec& b, const Vec& c);

/// min ||lambda||_1  s.t.  generators * lambda = x.
/// This is the gauge of conv(+-g_j) at x and, dually, the support function of
/// {y : |<g_j, y>| <= 1} at x.
double min_l1_representation(const Mat& generators, const Vec& x);

/// min over z of max_i |r_i + <d_i, z>|, solved through its dual
/// max <r, lambda>  s.t.  ||lambda||_1 <= 1, D^T lambda = 0.
double min_max_abs_affine(const Vec& r, const Mat& d);

}  // namespace convexa::lp
