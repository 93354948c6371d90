#pragma once

// Prescribed performance functions and the constrained -> unconstrained error
// transformation.
//
// Each error channel e_i is confined to a funnel xi_i(t) that decays
// exponentially from xi0 to xi_inf. The transformed error
//
//   E_i = 1/2 ln((delta_under + e_i/xi_i) / (delta_bar - e_i/xi_i))
//
// is finite exactly while -delta_under < e_i/xi_i < delta_bar, so keeping E
// bounded keeps e inside the funnel.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>

#include <Eigen/Core>

#include "se3ppf/errors.hpp"

namespace se3ppf {

template <typename Scalar>
struct PPFChannelT {
  Scalar xi0{};
  Scalar xi_inf{};
  Scalar ell{};          ///< decay rate, 1/s
  Scalar delta_bar{};
  Scalar delta_under{};

  void validate() const {
    if (!(xi0 > Scalar(0)) || !(xi_inf > Scalar(0)) || !(ell > Scalar(0)) ||
        !(delta_bar > Scalar(0)) || !(delta_under > Scalar(0))) {
      throw InvalidArgument("PPF channel parameters must be strictly positive");
    }
    if (!(xi0 > xi_inf)) {
      throw InvalidArgument("PPF channel requires xi0 > xi_inf");
    }
    if (delta_under > delta_bar) {
      throw InvalidArgument("PPF channel requires delta_under <= delta_bar");
    }
  }

  bool operator==(const PPFChannelT&) const = default;
};

template <typename Scalar>
struct PPFConfigT {
  /// Channel 0 is the attitude distance, channels 1..3 the position error.
  std::array<PPFChannelT<Scalar>, 4> channels{};

  void validate() const {
    for (const auto& ch : channels) ch.validate();
  }

  bool operator==(const PPFConfigT&) const = default;
};

using PPFChannel = PPFChannelT<double>;
using PPFConfig = PPFConfigT<double>;

template <typename Scalar>
struct XiValue {
  Scalar xi;
  Scalar xi_dot;
};

template <typename Scalar>
XiValue<Scalar> evaluate_xi(const PPFChannelT<Scalar>& ch, Scalar t) {
  const Scalar decay = std::exp(-ch.ell * t);
  return {(ch.xi0 - ch.xi_inf) * decay + ch.xi_inf,
          -ch.ell * (ch.xi0 - ch.xi_inf) * decay};
}

namespace detail {

inline constexpr double kClampMargin = 1e-9;

template <typename Scalar>
Scalar checked_ratio(Scalar e, Scalar xi, const PPFChannelT<Scalar>& ch, int channel,
                     Scalar t, bool clamp) {
  Scalar r = e / xi;
  if (clamp) {
    r = std::clamp(r, -ch.delta_under + Scalar(kClampMargin), ch.delta_bar - Scalar(kClampMargin));
  } else if (!(r > -ch.delta_under && r < ch.delta_bar)) {
    throw EnvelopeViolation(channel, static_cast<double>(t), static_cast<double>(r));
  }
  return r;
}

}  // namespace detail

/// E_i from e_i and xi_i. Throws EnvelopeViolation outside the funnel unless
/// `clamp` is set, in which case e/xi is clamped just inside the bounds.
template <typename Scalar>
Scalar transform_error(Scalar e, Scalar xi, const PPFChannelT<Scalar>& ch, int channel = 0,
                       Scalar t = Scalar(0), bool clamp = false) {
  const Scalar r = detail::checked_ratio(e, xi, ch, channel, t, clamp);
  return Scalar(0.5) * std::log((ch.delta_under + r) / (ch.delta_bar - r));
}

/// mu_i = dE_i/de_i = 1/(2 xi) (1/(delta_under + e/xi) + 1/(delta_bar - e/xi)).
template <typename Scalar>
Scalar mu(Scalar e, Scalar xi, const PPFChannelT<Scalar>& ch, int channel = 0,
          Scalar t = Scalar(0), bool clamp = false) {
  const Scalar r = detail::checked_ratio(e, xi, ch, channel, t, clamp);
  return (Scalar(1) / (Scalar(2) * xi)) *
         (Scalar(1) / (ch.delta_under + r) + Scalar(1) / (ch.delta_bar - r));
}

/// Transformed error together with the gains it induces in the error
/// dynamics dE/dt = Psi (de/dt - Lambda e). Diagonal blocks are stored as
/// vectors.
template <typename Scalar>
struct TransformedErrorT {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Vec4 = Eigen::Matrix<Scalar, 4, 1>;

  Scalar E_R{};
  Vec3 E_P = Vec3::Zero();
  Scalar Psi_R{};
  Vec3 Psi_P = Vec3::Zero();
  Scalar Lambda_R{};
  Vec3 Lambda_P = Vec3::Zero();
  Vec4 xi = Vec4::Zero();

  Vec4 E() const { return Vec4(E_R, E_P(0), E_P(1), E_P(2)); }
};

using TransformedError = TransformedErrorT<double>;

template <typename Scalar>
TransformedErrorT<Scalar> build_transformed(const Eigen::Matrix<Scalar, 4, 1>& e, Scalar t,
                                            const PPFConfigT<Scalar>& cfg, bool clamp = false) {
  TransformedErrorT<Scalar> out;
  for (int i = 0; i < 4; ++i) {
    const auto& ch = cfg.channels[static_cast<std::size_t>(i)];
    const XiValue<Scalar> x = evaluate_xi(ch, t);
    const Scalar E = transform_error(e(i), x.xi, ch, i, t, clamp);
    const Scalar m = mu(e(i), x.xi, ch, i, t, clamp);
    const Scalar lambda = x.xi_dot / x.xi;
    assert(m > Scalar(0));
    assert(lambda <= Scalar(0));
    out.xi(i) = x.xi;
    if (i == 0) {
      out.E_R = E;
      out.Psi_R = m;
      out.Lambda_R = lambda;
    } else {
      out.E_P(i - 1) = E;
      out.Psi_P(i - 1) = m;
      out.Lambda_P(i - 1) = lambda;
    }
  }
  return out;
}

/// Funnel membership with overshoot parameter `delta`:
///   -delta xi < e < xi        when e(0) >= 0
///   -xi < e < delta xi        when e(0) < 0
template <typename Scalar>
bool check_envelope(Scalar e, Scalar xi, int sign_of_e0, Scalar delta = Scalar(1)) {
  if (sign_of_e0 >= 0) {
    return e > -delta * xi && e < xi;
  }
  return e > -xi && e < delta * xi;
}

template <typename Scalar>
bool check_envelope(Scalar e, Scalar t, const PPFChannelT<Scalar>& ch, int sign_of_e0,
                    Scalar delta = Scalar(1)) {
  return check_envelope(e, evaluate_xi(ch, t).xi, sign_of_e0, delta);
}

}  // namespace se3ppf
