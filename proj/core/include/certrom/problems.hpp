#pragma once

#include "certrom/fom.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace certrom {

/// Channel flow over a reactive washcoat on [0,5]x[0,1]; mu = (Da, Pe).
struct ReactiveFlowConfig {
  Index nx = 100;
  Index ny = 20;
  Index steps = 1001;
  double t_end = 5.0;
  double washcoat = 0.34;
  Vector lower = Vector{{0.01, 9.0}};
  Vector upper = Vector{{10.0, 11.0}};
  /// Empty: box center.
  std::optional<Parameter> mu_bar;
  /// CSV raster covering the whole domain. Empty path: synthetic layered field.
  std::string raster_path;
  std::uint64_t raster_seed = 1;
  /// Raster resolution; 0 means the grid resolution.
  Index raster_nx = 0;
  Index raster_ny = 0;
  double kappa_min = 0.001;
  double kappa_max = 1.0;

  void validate() const;
  double length() const { return 5.0; }
};

/// Assembled but not yet lifted; exposed for tests and tooling.
ProblemData reactive_flow_data(const ReactiveFlowConfig& cfg);
std::shared_ptr<const FomProblem> build_reactive_flow(const ReactiveFlowConfig& cfg);
/// Permeability per grid cell as used by the assembly (1 in the channel).
FieldRaster reactive_flow_permeability(const ReactiveFlowConfig& cfg);

/// A rectangle of the floor plan. Walls and doors with a fixed value are not parameters.
struct PlanRegion {
  std::string name;
  Rectangle rect;
  std::optional<double> fixed;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Heated building on (0,2)x(0,1). Parameter order: parametric walls, parametric doors, heaters.
struct BuildingConfig {
  Index nx = 16;
  Index ny = 8;
  Index steps = 100;
  double t_end = 1.0;
  double background = 1.0;
  std::vector<PlanRegion> walls;
  std::vector<PlanRegion> doors;
  std::vector<PlanRegion> heaters;
  Rectangle room;
  Range wall_range{0.025, 0.25};
  Range door_range{0.25, 2.5};
  Range heater_range{0.0, 1000.0};
  /// Averaging window for the Monte Carlo quantity.
  double window_begin = 0.9;
  double window_end = 1.0;

  /// Default plan: two rows of four rooms, 10 walls, 10 doors (2 of each fixed), 12 heaters.
  static BuildingConfig default_plan();
  Index parameter_count() const;
  ParameterBox box() const;
  void validate() const;
};

ProblemData building_data(const BuildingConfig& cfg);
std::shared_ptr<const FomProblem> build_building(const BuildingConfig& cfg);

constexpr Index kBuildingParameters = 28;

/// Heat conduction on the unit square, zero Dirichlet data, u0 = 0.
/// mu = (conductivity left half, conductivity right half, source strength); output = domain average.
struct HeatConfig {
  Index n = 8;
  Index steps = 50;
  double t_end = 1.0;
  Vector lower = Vector{{0.1, 0.1, 0.5}};
  Vector upper = Vector{{1.0, 1.0, 2.0}};

  void validate() const;
};

std::shared_ptr<const FomProblem> build_heat(const HeatConfig& cfg);

}  // namespace certrom
