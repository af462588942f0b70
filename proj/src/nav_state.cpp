#include "sliw/nav_state.hpp"

#include <stdexcept>

namespace sliw {

bool NavState::is_valid() const {
  if (!is_rotation(R_WI, 1e-9) || !is_rotation(R_IL, 1e-9) || !is_rotation(R_IB, 1e-9)) {
    return false;
  }
  for (const Vec3* v : {&p_WI, &v_WI, &b_a, &b_w, &a_B, &w_B, &S_v, &g_W, &p_IL, &p_IB}) {
    if (!v->allFinite()) return false;
  }
  if ((S_v.array() < 0.5).any() || (S_v.array() > 1.5).any()) return false;
  const double gn = g_W.norm();
  return gn >= 9.0 && gn <= 10.5;
}

NavState box_plus(const NavState& x, const ErrorVector& d) {
  if (!d.allFinite()) {
    throw std::invalid_argument("box_plus: non-finite increment");
  }
  NavState out = x;
  if (d.isZero(0.0)) return out;  // bit-for-bit identity on zero increment
  out.p_WI += d.segment<3>(blk::kPos);
  out.v_WI += d.segment<3>(blk::kVel);
  out.R_WI = x.R_WI * exp_so3(d.segment<3>(blk::kRot));
  out.b_a += d.segment<3>(blk::kBa);
  out.b_w += d.segment<3>(blk::kBw);
  out.a_B += d.segment<3>(blk::kAccB);
  out.w_B += d.segment<3>(blk::kRateB);
  out.S_v += d.segment<3>(blk::kScale);
  out.g_W += d.segment<3>(blk::kGrav);
  out.R_IL = x.R_IL * exp_so3(d.segment<3>(blk::kRotIL));
  out.p_IL += d.segment<3>(blk::kPosIL);
  out.R_IB = x.R_IB * exp_so3(d.segment<3>(blk::kRotIB));
  out.p_IB += d.segment<3>(blk::kPosIB);
  return out;
}

ErrorVector box_minus(const NavState& a, const NavState& b) {
  ErrorVector d;
  d.segment<3>(blk::kPos) = a.p_WI - b.p_WI;
  d.segment<3>(blk::kVel) = a.v_WI - b.v_WI;
  d.segment<3>(blk::kRot) = log_so3(b.R_WI.transpose() * a.R_WI);
  d.segment<3>(blk::kBa) = a.b_a - b.b_a;
  d.segment<3>(blk::kBw) = a.b_w - b.b_w;
  d.segment<3>(blk::kAccB) = a.a_B - b.a_B;
  d.segment<3>(blk::kRateB) = a.w_B - b.w_B;
  d.segment<3>(blk::kScale) = a.S_v - b.S_v;
  d.segment<3>(blk::kGrav) = a.g_W - b.g_W;
  d.segment<3>(blk::kRotIL) = log_so3(b.R_IL.transpose() * a.R_IL);
  d.segment<3>(blk::kPosIL) = a.p_IL - b.p_IL;
  d.segment<3>(blk::kRotIB) = log_so3(b.R_IB.transpose() * a.R_IB);
  d.segment<3>(blk::kPosIB) = a.p_IB - b.p_IB;
  return d;
}

}  // namespace sliw
