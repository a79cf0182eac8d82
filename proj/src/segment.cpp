#include "nsfde/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nsfde/errors.hpp"

namespace nsfde {

int delay_steps(double h, double dt) {
  if (!(h > 0.0)) throw ConfigError("h", "delay must be positive");
  if (!(dt > 0.0)) throw ConfigError("solver.dt", "time step must be positive");
  const double ratio = h / dt;
  const double m = std::round(ratio);
  if (m < 1.0 || std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("h", "delay h = " + std::to_string(h) +
                               " is not an integer multiple of dt = " + std::to_string(dt));
  }
  return static_cast<int>(m);
}

Segment::Segment(double h, double dt, int n_modes)
    : h_(h), dt_(dt), steps_(delay_steps(h, dt)) {
  if (n_modes < 1) throw ShapeError("segment needs at least one mode");
  buffer_.assign(steps_ + 1, ModeVector::Zero(n_modes));
}

Segment::Segment(double h, double dt, std::vector<ModeVector> values)
    : h_(h), dt_(dt), steps_(delay_steps(h, dt)), buffer_(std::move(values)) {
  if (static_cast<int>(buffer_.size()) != steps_ + 1) {
    throw ShapeError("segment needs " + std::to_string(steps_ + 1) + " nodes, got " +
                     std::to_string(buffer_.size()));
  }
  const auto n = buffer_.front().size();
  if (n < 1) throw ShapeError("segment needs at least one mode");
  for (const auto& v : buffer_) {
    if (v.size() != n) throw ShapeError("segment nodes have unequal lengths");
  }
}

const ModeVector& Segment::node(int j) const {
  return buffer_[(head_ + static_cast<std::size_t>(j)) % buffer_.size()];
}

ModeVector Segment::evaluate(double theta) const {
  if (!(theta >= -h_ - 1e-12 * h_ && theta <= 0.0)) {
    throw DomainError("evaluate: theta = " + std::to_string(theta) + " outside [-h, 0]");
  }
  const double pos = (theta + h_) / dt_;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) <= 1e-9) {
    return node(std::clamp(static_cast<int>(nearest), 0, steps_));
  }
  const int j = std::clamp(static_cast<int>(std::floor(pos)), 0, steps_ - 1);
  const double w = pos - j;
  return (1.0 - w) * node(j) + w * node(j + 1);
}

double Segment::sup_norm() const {
  double best = 0.0;
  for (const auto& v : buffer_) best = std::max(best, v.norm());
  return best;
}

void Segment::push(const ModeVector& value) {
  if (value.size() != n_modes()) {
    throw ShapeError("shift_append: value has " + std::to_string(value.size()) +
                     " modes, segment has " + std::to_string(n_modes()));
  }
  buffer_[head_] = value;
  head_ = (head_ + 1) % buffer_.size();
}

std::vector<ModeVector> Segment::nodes() const {
  std::vector<ModeVector> out;
  out.reserve(buffer_.size());
  for (int j = 0; j <= steps_; ++j) out.push_back(node(j));
  return out;
}

double sup_norm(const Segment& seg) { return seg.sup_norm(); }

ModeVector evaluate(const Segment& seg, double theta) { return seg.evaluate(theta); }

Segment shift_append(const Segment& seg, const ModeVector& value) {
  Segment next = seg;
  next.push(value);
  return next;
}

Segment from_initial_condition(const HistoryFunction& phi, double h, double dt,
                               const PhysicalGrid& grid) {
  const int m = delay_steps(h, dt);
  std::vector<ModeVector> values;
  values.reserve(m + 1);
  GridField field(grid.size());
  for (int j = 0; j <= m; ++j) {
    const double theta = j == m ? 0.0 : -h + j * dt;
    for (int i = 0; i < grid.size(); ++i) field(i) = phi(theta, grid.nodes()(i));
    values.push_back(grid.project(field));
  }
  return Segment(h, dt, std::move(values));
}

HistoryFunction InitialCondition::as_function(double h) const {
  std::function<double(double)> spatial;
  switch (profile) {
    case Profile::zero:
      spatial = [](double) { return 0.0; };
      break;
    case Profile::sine: {
      const double freq = wavenumber * std::numbers::pi;
      spatial = [freq](double x) { return std::sin(freq * x); };
      break;
    }
    case Profile::parabola:
      spatial = [](double x) { return 4.0 * x * (1.0 - x); };
      break;
  }
  const double amp = amplitude;
  if (time_shape == TimeShape::ramp) {
    return [spatial, amp, h](double theta, double x) {
      return amp * (1.0 + theta / h) * spatial(x);
    };
  }
  return [spatial, amp](double, double x) { return amp * spatial(x); };
}

Segment from_initial_condition(const InitialCondition& ic, double h, double dt,
                               const PhysicalGrid& grid) {
  return from_initial_condition(ic.as_function(h), h, dt, grid);
}

}  // namespace nsfde
