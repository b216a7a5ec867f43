#include "moodscope/gp.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace moodscope {

namespace {

using Vec3 = Eigen::Vector3d;

struct Box {
  Vec3 lo;
  Vec3 hi;
  Vec3 clamp(const Vec3& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

Box make_box(double variance, const GpFitOptions& options) {
  const double v = std::max(variance, 1e-12);
  Box b;
  b.lo << std::log(options.min_lengthscale), std::log(1e-6 * v), std::log(std::max(1e-6 * v, kInitialJitter));
  b.hi << std::log(options.max_lengthscale), std::log(1e2 * v), std::log(10.0 * v);
  return b;
}

struct Evaluation {
  double f = std::numeric_limits<double>::infinity();  // negative log marginal likelihood
  Vec3 g = Vec3::Zero();
  bool ok = false;
};

Evaluation evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Vec3& p) {
  auto lml = log_marginal_likelihood<double>(x, y, p);
  if (!lml || !std::isfinite(lml->value) || !lml->gradient.allFinite()) return {};
  return {-lml->value, -lml->gradient, true};
}

Vec3 projected_gradient(const Vec3& x, const Vec3& g, const Box& box) {
  Vec3 pg = g;
  for (int i = 0; i < 3; ++i) {
    if (x(i) <= box.lo(i) && g(i) > 0.0) pg(i) = 0.0;
    if (x(i) >= box.hi(i) && g(i) < 0.0) pg(i) = 0.0;
  }
  return pg;
}

struct LocalResult {
  Vec3 params;
  double f;
  bool ok;
};

/// Box-constrained BFGS with Armijo backtracking along the projected path.
LocalResult minimize(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Vec3 p, const Box& box,
                     const GpFitOptions& options) {
  p = box.clamp(p);
  Evaluation cur = evaluate(x, y, p);
  if (!cur.ok) return {p, cur.f, false};
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  constexpr double kMaxStep = 2.0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vec3 pg = projected_gradient(p, cur.g, box);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    Vec3 free = (pg.array() != 0.0).cast<double>();
    Vec3 d = -(free.asDiagonal() * h * free.asDiagonal()) * cur.g;
    if (cur.g.dot(d) >= 0.0) {
      h.setIdentity();
      d = -pg;
    }
    const double norm = d.lpNorm<Eigen::Infinity>();
    if (norm > kMaxStep) d *= kMaxStep / norm;

    double step = 1.0;
    Evaluation next;
    Vec3 trial;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      trial = box.clamp(p + step * d);
      next = evaluate(x, y, trial);
      if (next.ok && next.f <= cur.f + 1e-4 * cur.g.dot(trial - p)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!h.isIdentity()) {
        h.setIdentity();
        continue;
      }
      break;
    }
    const Vec3 s = trial - p;
    const Vec3 yk = next.g - cur.g;
    const double sy = s.dot(yk);
    const double improvement = cur.f - next.f;
    p = trial;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
      h = (id - rho * s * yk.transpose()) * h * (id - rho * yk * s.transpose()) + rho * s * s.transpose();
    }
    cur = next;
    if (improvement < 1e-12 * (1.0 + std::abs(cur.f)) && s.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return {p, cur.f, true};
}

struct Prepared {
  Eigen::VectorXd centred;
  double variance;
};

Prepared prepare(const Eigen::VectorXd& inputs, const Eigen::VectorXd& targets) {
  if (inputs.size() != targets.size()) throw std::invalid_argument("GP inputs and targets differ in length");
  if (targets.size() < 2) throw std::invalid_argument("GP fit needs at least two points");
  if (!targets.allFinite() || !inputs.allFinite()) throw std::invalid_argument("GP fit: non-finite data");
  Prepared p;
  p.centred = targets.array() - targets.mean();
  p.variance = p.centred.squaredNorm() / static_cast<double>(targets.size());
  return p;
}

Vec3 start_point(double lengthscale, double variance) {
  const double v = std::max(variance, 1e-12);
  return Vec3(std::log(lengthscale), std::log(v), std::log(0.1 * v));
}

}  // namespace

GpFit fit_lengthscale(const Eigen::VectorXd& inputs, const Eigen::VectorXd& targets, const GpFitOptions& options) {
  const auto prep = prepare(inputs, targets);
  GpFit fit;
  fit.inputs = inputs;
  fit.targets = targets;
  const Box box = make_box(prep.variance, options);

  if (prep.variance == 0.0) {
    // Constant targets carry no information about correlation length.
    const Vec3 p(box.hi(0), box.lo(1), box.lo(2));
    const auto e = evaluate(inputs, prep.centred, p);
    fit.hyper = {std::exp(p(0)), std::exp(p(1)), std::exp(p(2))};
    fit.log_marginal_likelihood = e.ok ? -e.f : std::numeric_limits<double>::quiet_NaN();
    fit.degenerate = true;
    return fit;
  }

  std::optional<LocalResult> best;
  for (double start : options.lengthscale_starts) {
    const auto r = minimize(inputs, prep.centred, start_point(start, prep.variance), box, options);
    if (r.ok && (!best || r.f < best->f)) best = r;
  }
  if (!best) throw std::runtime_error("GP hyperparameter optimization failed at every start");

  fit.hyper = {std::exp(best->params(0)), std::exp(best->params(1)), std::exp(best->params(2))};
  fit.log_marginal_likelihood = -best->f;
  constexpr double kAtBound = 1e-3;
  fit.degenerate = best->params(0) - box.lo(0) < kAtBound || box.hi(0) - best->params(0) < kAtBound ||
                   best->params(1) - box.lo(1) < kAtBound;
  return fit;
}

std::vector<double> start_log_likelihoods(const Eigen::VectorXd& inputs, const Eigen::VectorXd& targets,
                                          const GpFitOptions& options) {
  const auto prep = prepare(inputs, targets);
  const Box box = make_box(prep.variance, options);
  std::vector<double> out;
  for (double start : options.lengthscale_starts) {
    const auto e = evaluate(inputs, prep.centred, box.clamp(start_point(start, prep.variance)));
    out.push_back(e.ok ? -e.f : -std::numeric_limits<double>::infinity());
  }
  return out;
}

std::optional<GpInputs> gp_inputs(const UserTimeline& timeline, const DailySeries& series, const WindowConfig& config) {
  if (timeline.posts.size() < static_cast<std::size_t>(kMinGpPosts)) return std::nullopt;
  GpInputs in;
  in.targets = mood_mu(series, config);
  in.inputs = Eigen::VectorXd::LinSpaced(in.targets.size(), 0.0, static_cast<double>(in.targets.size() - 1));
  return in;
}

GroupComparison compare_groups(std::span<const GpFit> fits, std::span<const Ternary> labels) {
  if (fits.size() != labels.size()) throw std::invalid_argument("fits and labels differ in length");
  std::map<Ternary, std::vector<double>> groups;
  for (std::size_t i = 0; i < fits.size(); ++i)
    if (!fits[i].excluded) groups[labels[i]].push_back(fits[i].hyper.lengthscale);
  if (groups.size() < 2) throw std::invalid_argument("group comparison needs at least two nonempty groups");
  for (const auto& [label, values] : groups)
    if (values.size() < 2)
      throw std::invalid_argument("group '" + std::string(label_name(label)) + "' has fewer than two members");

  GroupComparison out;
  for (const auto& [label, values] : groups) {
    out.median_lengthscale[label] = median(values);
    out.group_size[label] = values.size();
  }
  for (auto a = groups.begin(); a != groups.end(); ++a)
    for (auto b = std::next(a); b != groups.end(); ++b)
      out.pairs.push_back({a->first, b->first, mann_whitney_u(a->second, b->second)});
  return out;
}

}  // namespace moodscope
