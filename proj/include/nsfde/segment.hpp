#ifndef NSFDE_SEGMENT_HPP
#define NSFDE_SEGMENT_HPP

#include <functional>
#include <vector>

#include "nsfde/spectral.hpp"

namespace nsfde {

/// Number of grid steps m with h = m dt. Throws ConfigError when h/dt is not an integer.
int delay_steps(double h, double dt);

/// History window u_t(theta) = u(t + theta), theta in [-h, 0], on a uniform grid.
///
/// Node j holds u(t - h + j dt) for j = 0..m; node m is the current state. Stored as a ring
/// buffer so advancing by one step is O(N).
class Segment {
 public:
  /// Zero segment.
  Segment(double h, double dt, int n_modes);
  /// `values` must hold m + 1 vectors of equal length, oldest first.
  Segment(double h, double dt, std::vector<ModeVector> values);

  double h() const { return h_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  int n_modes() const { return static_cast<int>(buffer_.front().size()); }

  const ModeVector& node(int j) const;
  const ModeVector& current() const { return node(steps_); }
  const ModeVector& oldest() const { return node(0); }

  /// Linear interpolation between adjacent nodes; exact at nodes.
  ModeVector evaluate(double theta) const;

  /// max_j ||node(j)||: the grid approximation of sup_theta ||u(t+theta)||.
  double sup_norm() const;

  /// Drops node 0 and appends `value` as the new current state.
  void push(const ModeVector& value);

  std::vector<ModeVector> nodes() const;

 private:
  double h_;
  double dt_;
  int steps_;
  std::vector<ModeVector> buffer_;
  std::size_t head_ = 0;  // physical index of node 0
};

double sup_norm(const Segment& seg);
ModeVector evaluate(const Segment& seg, double theta);
Segment shift_append(const Segment& seg, const ModeVector& value);

/// Initial history phi(theta, x) on [-h, 0] x (0,1).
using HistoryFunction = std::function<double(double theta, double x)>;

/// Samples phi at the grid nodes and projects each time slice onto the operator eigenbasis.
Segment from_initial_condition(const HistoryFunction& phi, double h, double dt,
                               const PhysicalGrid& grid);

/// Built-in separable histories c(theta) * amplitude * profile(x).
struct InitialCondition {
  enum class Profile { zero, sine, parabola };
  enum class TimeShape { constant, ramp };

  Profile profile = Profile::sine;
  int wavenumber = 1;
  TimeShape time_shape = TimeShape::constant;
  double amplitude = 1.0;

  HistoryFunction as_function(double h) const;
};

Segment from_initial_condition(const InitialCondition& ic, double h, double dt,
                               const PhysicalGrid& grid);

}  // namespace nsfde

#endif  // NSFDE_SEGMENT_HPP
