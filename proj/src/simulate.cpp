#include "udkf/simulate.hpp"

#include "udkf/error.hpp"

#include <cmath>
#include <cstring>

namespace udkf {

double NormalRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

VectorXd NormalRng::normal_vector(const UdFactor& cov) {
  VectorXd z(cov.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal() * std::sqrt(cov.d(i));
  return cov.u * z;
}

SimulatedData simulate(const Model& model, const VectorXd& theta, std::size_t n,
                       std::uint64_t seed) {
  if (model.innovation_regressor()) {
    throw Error(ErrorCode::InvalidArgument,
                "simulate: innovation-driven models need a dedicated generator");
  }
  model.validate(theta);
  const Dims dims = model.dims();
  NormalRng rng(seed);

  const InitialState init = model.initial_state(theta);
  VectorXd alpha = init.mean + rng.normal_vector(udu_factorize(init.pi0));

  FilterContext ctx;
  ctx.k = 1;
  ctx.alpha = init.mean;
  ctx.y_prev = VectorXd::Zero(dims.m);
  const RawMatrices raw = model.raw_matrices(theta, ctx);

  MatrixXd joint(dims.n + dims.m, dims.n + dims.m);
  joint << raw.q, raw.s, raw.s.transpose(), raw.h;
  joint = 0.5 * (joint + joint.transpose()).eval();
  const UdFactor noise = udu_factorize(joint);

  const bool pairwise = model.kind() == ModelKind::Pairwise;
  SimulatedData out;
  out.data.y.reserve(n);
  out.alpha.reserve(n);

  auto draw_x = [&]() -> VectorXd {
    VectorXd x(dims.d);
    for (Index i = 0; i < dims.d; ++i) x(i) = rng.normal();
    return x;
  };

  VectorXd x = pairwise ? model.presample_regressor(theta) : draw_x();
  out.data.x0 = x;
  for (std::size_t k = 0; k <= n; ++k) {
    const VectorXd w = noise.size() ? rng.normal_vector(noise) : VectorXd();
    const VectorXd y = raw.z * alpha + raw.beta * x + w.tail(dims.m);
    if (k == 0) {
      out.data.y0 = y;
    } else {
      out.data.y.push_back(y);
      out.alpha.push_back(alpha);
      out.data.x.push_back(x);
    }
    if (k == n) break;
    alpha = raw.t * alpha + raw.b * x + w.head(dims.n);
    x = pairwise ? y : draw_x();
  }
  return out;
}

SimulatedData simulate_tee(const VectorXd& theta, std::size_t n, std::uint64_t seed,
                           const TeeTruth& truth) {
  TeeModel probe;
  probe.validate(theta);
  const double a0 = theta(TeeModel::kA0), a1 = theta(TeeModel::kA1), b1 = theta(TeeModel::kB1);
  const double delta = theta(TeeModel::kDelta);
  const double s0 = theta(TeeModel::kSigma0), s1 = theta(TeeModel::kSigma1);

  NormalRng rng(seed);
  SimulatedData out;
  out.data.y0 = VectorXd::Constant(1, truth.y0);
  out.data.y.reserve(n);
  out.alpha.reserve(n);

  double h = a0 / (1.0 - a1 - b1);
  double beta0 = truth.beta0, beta1 = truth.beta1;
  double y_prev = truth.y0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double mu = beta0 + beta1 * y_prev + delta * h;
    const double eps = std::sqrt(h) * rng.normal();
    const double y = mu + eps;
    out.data.y.push_back(VectorXd::Constant(1, y));
    out.alpha.push_back((VectorXd(3) << h, beta0, beta1).finished());
    h = a0 + a1 * eps * eps + b1 * h;
    beta0 += s0 * rng.normal();
    beta1 += s1 * rng.normal();
    y_prev = y;
  }
  return out;
}

namespace {

void fnv_mix(std::uint64_t& h, const VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double x = v(i);
    std::memcpy(&bits, &x, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
}

}  // namespace

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& y : data.y) fnv_mix(h, y);
  for (const auto& x : data.x) fnv_mix(h, x);
  fnv_mix(h, data.y0);
  fnv_mix(h, data.x0);
  return h;
}

}  // namespace udkf
