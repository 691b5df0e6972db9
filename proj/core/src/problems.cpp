#include "certrom/problems.hpp"

#include <algorithm>
#include <cmath>

namespace certrom {

namespace {

// node on the boundary of the grid's domain, by index
bool on_boundary(const StructuredGrid& grid, Index node) {
  const Index i = node % (grid.nx() + 1), j = node / (grid.nx() + 1);
  return i == 0 || j == 0 || i == grid.nx() || j == grid.ny();
}

std::vector<bool> mask_of(const StructuredGrid& grid, const std::vector<Index>& cells) {
  std::vector<bool> m(static_cast<std::size_t>(grid.cell_count()), false);
  for (Index c : cells) m[static_cast<std::size_t>(c)] = true;
  return m;
}

ParameterFunction component(Index k) {
  return [k](const Parameter& mu) { return mu[k]; };
}

double one(const Parameter&) { return 1.0; }

}  // namespace

void ReactiveFlowConfig::validate() const {
  if (nx < 1 || ny < 1) throw InvalidArgument("reactive flow: grid size must be positive");
  if (steps < 2) throw InvalidArgument("reactive flow: need at least 2 time nodes");
  if (!(t_end > 0.0)) throw InvalidArgument("reactive flow: T must be positive");
  if (!(washcoat > 0.0 && washcoat < 1.0)) throw InvalidArgument("reactive flow: washcoat height must lie in (0,1)");
  if (lower.size() != 2 || upper.size() != 2) throw InvalidArgument("reactive flow: parameter box must be 2-dimensional");
  if (!(kappa_min > 0.0 && kappa_max >= kappa_min)) throw InvalidArgument("reactive flow: rescale bounds must be positive");
  if (raster_nx < 0 || raster_ny < 0) throw InvalidArgument("reactive flow: raster size must be nonnegative");
}

FieldRaster reactive_flow_permeability(const ReactiveFlowConfig& cfg) {
  cfg.validate();
  auto grid = build_grid({0.0, cfg.length(), 0.0, 1.0}, cfg.nx, cfg.ny);
  const Index rnx = cfg.raster_nx > 0 ? cfg.raster_nx : cfg.nx;
  const Index rny = cfg.raster_ny > 0 ? cfg.raster_ny : cfg.ny;
  FieldRaster raster = cfg.raster_path.empty()
                           ? synthetic_layered_raster(rnx, rny, cfg.raster_seed, cfg.kappa_min, cfg.kappa_max)
                           : load_raster_csv(cfg.raster_path, rnx, rny, cfg.kappa_min, cfg.kappa_max);
  FieldRaster kappa = FieldRaster::constant(cfg.nx, cfg.ny, 1.0);
  for (Index c = 0; c < grid.cell_count(); ++c) {
    auto [x, y] = grid.cell_center(c);
    if (y >= cfg.washcoat) continue;
    // sample the raster cell that holds the center
    const Index ri = std::min(rnx - 1, static_cast<Index>(x / cfg.length() * static_cast<double>(rnx)));
    const Index rj = std::min(rny - 1, static_cast<Index>(y * static_cast<double>(rny)));
    kappa.values[static_cast<std::size_t>(c)] = raster.at(rj * rnx + ri);
  }
  return kappa;
}

ProblemData reactive_flow_data(const ReactiveFlowConfig& cfg) {
  cfg.validate();
  auto grid = build_grid({0.0, cfg.length(), 0.0, 1.0}, cfg.nx, cfg.ny);
  FieldRaster kappa = reactive_flow_permeability(cfg);

  std::vector<Index> wash, channel;
  for (Index c = 0; c < grid.cell_count(); ++c) (grid.cell_center(c)[1] < cfg.washcoat ? wash : channel).push_back(c);
  if (wash.empty() || channel.empty()) throw InvalidArgument("reactive flow: grid does not resolve the washcoat");

  VelocityField v{std::vector<double>(static_cast<std::size_t>(grid.cell_count()), 0.0),
                  std::vector<double>(static_cast<std::size_t>(grid.cell_count()), 0.0)};
  for (Index c : channel) v.vx[static_cast<std::size_t>(c)] = 1.0;

  ProblemData d;
  d.grid = grid;
  d.box = ParameterBox(cfg.lower, cfg.upper);
  d.mu_bar = cfg.mu_bar ? *cfg.mu_bar : d.box.center();
  d.time = TimeGrid(cfg.t_end, cfg.steps);
  d.op = AffineOperator({
      {"diffusion", one, assemble_diffusion(grid, kappa), true, true},
      {"advection", component(1), assemble_advection(grid, v), false, false},
      {"reaction", component(0), assemble_reaction(grid, mask_of(grid, wash)), true, true},
  });
  d.mass = assemble_mass(grid);
  d.rhs = AffineFunctional(std::vector<FunctionalComponent>{});

  // Dirichlet everywhere except the outflow part of the right edge; g = 1 on the inflow part.
  d.lifting.values = Vector::Zero(grid.node_count());
  std::vector<std::array<Index, 2>> outflow;
  for (Index n = 0; n < grid.node_count(); ++n) {
    if (!on_boundary(grid, n)) continue;
    auto [x, y] = grid.node_coords(n);
    const bool out = n % (grid.nx() + 1) == grid.nx() && y >= cfg.washcoat;
    if (out) continue;
    d.lifting.constrained.push_back(n);
    if (n % (grid.nx() + 1) == 0 && y >= cfg.washcoat) d.lifting.values[n] = 1.0;
  }
  for (Index j = 0; j < grid.ny(); ++j) {
    const Index a = grid.node(grid.nx(), j), b = grid.node(grid.nx(), j + 1);
    if (grid.node_coords(a)[1] >= cfg.washcoat) outflow.push_back({a, b});
  }
  d.output = assemble_boundary_average(grid, outflow);
  d.initial = d.lifting.values;
  return d;
}

std::shared_ptr<const FomProblem> build_reactive_flow(const ReactiveFlowConfig& cfg) {
  return std::make_shared<const FomProblem>(make_fom_problem(reactive_flow_data(cfg)));
}

namespace {

Rectangle cells_rect(Index i0, Index i1, Index j0, Index j1) {
  const double h = 0.125;
  return {static_cast<double>(i0) * h, static_cast<double>(i1 + 1) * h, static_cast<double>(j0) * h,
          static_cast<double>(j1 + 1) * h};
}

bool overlaps(const Rectangle& a, const Rectangle& b) {
  return std::min(a.x1, b.x1) > std::max(a.x0, b.x0) && std::min(a.y1, b.y1) > std::max(a.y0, b.y0);
}

bool inside(const Rectangle& r, const Rectangle& dom) {
  return r.x0 >= dom.x0 && r.x1 <= dom.x1 && r.y0 >= dom.y0 && r.y1 <= dom.y1 && r.x1 > r.x0 && r.y1 > r.y0;
}

}  // namespace

BuildingConfig BuildingConfig::default_plan() {
  // 16x8 cells of 0.125: interior wall row 4 splits the house into a lower and an upper floor,
  // wall columns 3, 7, 11 split each floor into four rooms.
  BuildingConfig c;
  int w = 0, d = 0;
  auto wall = [&](Rectangle r, std::optional<double> fixed = std::nullopt) {
    c.walls.push_back({"wall" + std::to_string(w++), r, fixed});
  };
  auto door = [&](Rectangle r, std::optional<double> fixed = std::nullopt) {
    c.doors.push_back({"door" + std::to_string(d++), r, fixed});
  };
  const double wall_fixed = 0.1, door_fixed = 1.0;
  // horizontal segments, each with a door at its right end
  wall(cells_rect(0, 1, 4, 4));
  door(cells_rect(2, 2, 4, 4));
  wall(cells_rect(3, 5, 4, 4));
  door(cells_rect(6, 6, 4, 4));
  wall(cells_rect(7, 9, 4, 4));
  door(cells_rect(10, 10, 4, 4));
  wall(cells_rect(11, 14, 4, 4), wall_fixed);
  door(cells_rect(15, 15, 4, 4), door_fixed);
  // vertical segments, doors next to the corridor wall
  for (Index col : {3, 7, 11}) {
    wall(cells_rect(col, col, 0, 2));
    door(cells_rect(col, col, 3, 3));
  }
  for (Index col : {3, 7, 11}) {
    const bool fixed = col == 11;
    wall(cells_rect(col, col, 6, 7), fixed ? std::optional<double>(wall_fixed) : std::nullopt);
    door(cells_rect(col, col, 5, 5), fixed ? std::optional<double>(door_fixed) : std::nullopt);
  }
  int h = 0;
  for (Index col : {0, 2, 5, 9, 12, 14}) c.heaters.push_back({"heater" + std::to_string(h++), cells_rect(col, col, 0, 0), {}});
  for (Index col : {1, 5, 8, 10, 13, 15}) c.heaters.push_back({"heater" + std::to_string(h++), cells_rect(col, col, 7, 7), {}});
  c.room = cells_rect(4, 6, 0, 3);
  return c;
}

Index BuildingConfig::parameter_count() const {
  Index n = static_cast<Index>(heaters.size());
  for (const auto& r : walls) n += r.fixed ? 0 : 1;
  for (const auto& r : doors) n += r.fixed ? 0 : 1;
  return n;
}

ParameterBox BuildingConfig::box() const {
  const Index n = parameter_count();
  Vector lo(n), hi(n);
  Index k = 0;
  for (const auto& r : walls)
    if (!r.fixed) lo[k] = wall_range.lo, hi[k++] = wall_range.hi;
  for (const auto& r : doors)
    if (!r.fixed) lo[k] = door_range.lo, hi[k++] = door_range.hi;
  for (std::size_t i = 0; i < heaters.size(); ++i) lo[k] = heater_range.lo, hi[k++] = heater_range.hi;
  return ParameterBox(lo, hi);
}

void BuildingConfig::validate() const {
  if (nx < 1 || ny < 1) throw InvalidArgument("building: grid size must be positive");
  if (steps < 2) throw InvalidArgument("building: need at least 2 time nodes");
  if (!(t_end > 0.0)) throw InvalidArgument("building: T must be positive");
  if (!(background > 0.0)) throw InvalidArgument("building: background conductivity must be positive");
  if (parameter_count() != kBuildingParameters)
    throw InvalidArgument("building: floor plan must define 28 parameters, got " + std::to_string(parameter_count()));
  if (!(wall_range.lo > 0.0 && wall_range.hi >= wall_range.lo) || !(door_range.lo > 0.0 && door_range.hi >= door_range.lo))
    throw InvalidArgument("building: wall and door ranges must be positive");
  if (!(heater_range.hi >= heater_range.lo)) throw InvalidArgument("building: empty heater range");
  if (!(window_begin >= 0.0 && window_end > window_begin && window_end <= t_end))
    throw InvalidArgument("building: output window must lie in [0, T]");
  const Rectangle dom{0.0, 2.0, 0.0, 1.0};
  std::vector<const PlanRegion*> all;
  for (const auto* list : {&walls, &doors, &heaters})
    for (const auto& r : *list) all.push_back(&r);
  for (const auto* r : all) {
    if (!inside(r->rect, dom)) throw InvalidArgument("building: region '" + r->name + "' is not inside the domain");
    if (r->fixed && !(*r->fixed > 0.0)) throw InvalidArgument("building: fixed value of '" + r->name + "' must be positive");
  }
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = a + 1; b < all.size(); ++b)
      if (overlaps(all[a]->rect, all[b]->rect))
        throw InvalidArgument("building: regions '" + all[a]->name + "' and '" + all[b]->name + "' overlap");
  if (!inside(room, dom)) throw InvalidArgument("building: room is not inside the domain");
}

ProblemData building_data(const BuildingConfig& cfg) {
  cfg.validate();
  auto grid = build_grid({0.0, 2.0, 0.0, 1.0}, cfg.nx, cfg.ny);
  auto cells_of = [&](const PlanRegion& r) {
    auto cells = grid.cells_in(r.rect);
    if (cells.empty()) throw InvalidArgument("building: region '" + r.name + "' contains no cell center");
    return cells;
  };

  // fixed regions enter the background component with their constant value
  FieldRaster kappa = FieldRaster::constant(cfg.nx, cfg.ny, cfg.background);
  std::vector<bool> background(static_cast<std::size_t>(grid.cell_count()), true);
  std::vector<OperatorComponent> ops;
  ops.push_back({"background", one, {}, true, true});
  Index k = 0;
  for (const auto* list : {&cfg.walls, &cfg.doors}) {
    for (const auto& r : *list) {
      auto cells = cells_of(r);
      if (r.fixed) {
        for (Index c : cells) kappa.values[static_cast<std::size_t>(c)] = *r.fixed;
        continue;
      }
      for (Index c : cells) background[static_cast<std::size_t>(c)] = false;
      ops.push_back({r.name, component(k++), assemble_diffusion(grid, FieldRaster::constant(cfg.nx, cfg.ny, 1.0), mask_of(grid, cells)),
                     true, true});
    }
  }
  ops.front().matrix = assemble_diffusion(grid, kappa, background);

  std::vector<FunctionalComponent> loads;
  for (const auto& r : cfg.heaters) loads.push_back({r.name, component(k++), assemble_cell_load(grid, cells_of(r)), true});

  auto room = grid.cells_in(cfg.room);
  if (room.empty()) throw InvalidArgument("building: room contains no cell center");

  ProblemData d;
  d.grid = grid;
  d.box = cfg.box();
  d.mu_bar = d.box.center();
  d.time = TimeGrid(cfg.t_end, cfg.steps);
  d.op = AffineOperator(std::move(ops));
  d.mass = assemble_mass(grid);
  d.rhs = AffineFunctional(std::move(loads), [](double t) { return std::min(2.0 * t, 1.0); });
  d.output = assemble_cell_average(grid, room);
  for (Index n = 0; n < grid.node_count(); ++n)
    if (on_boundary(grid, n)) d.lifting.constrained.push_back(n);
  return d;
}

std::shared_ptr<const FomProblem> build_building(const BuildingConfig& cfg) {
  return std::make_shared<const FomProblem>(make_fom_problem(building_data(cfg)));
}

void HeatConfig::validate() const {
  if (n < 1) throw InvalidArgument("heat: grid size must be positive");
  if (steps < 2) throw InvalidArgument("heat: need at least 2 time nodes");
  if (!(t_end > 0.0)) throw InvalidArgument("heat: T must be positive");
  if (lower.size() != 3 || upper.size() != 3) throw InvalidArgument("heat: parameter box must be 3-dimensional");
  if (!(lower.minCoeff() > 0.0)) throw InvalidArgument("heat: parameter box must be positive");
}

std::shared_ptr<const FomProblem> build_heat(const HeatConfig& cfg) {
  cfg.validate();
  auto grid = build_grid({0.0, 1.0, 0.0, 1.0}, cfg.n, cfg.n);
  std::vector<Index> left, right, all;
  for (Index c = 0; c < grid.cell_count(); ++c) {
    (grid.cell_center(c)[0] < 0.5 ? left : right).push_back(c);
    all.push_back(c);
  }
  const FieldRaster unit = FieldRaster::constant(cfg.n, cfg.n, 1.0);
  ProblemData d;
  d.grid = grid;
  d.box = ParameterBox(cfg.lower, cfg.upper);
  d.mu_bar = d.box.center();
  d.time = TimeGrid(cfg.t_end, cfg.steps);
  d.op = AffineOperator({{"left", component(0), assemble_diffusion(grid, unit, mask_of(grid, left)), true, true},
                         {"right", component(1), assemble_diffusion(grid, unit, mask_of(grid, right)), true, true}});
  d.mass = assemble_mass(grid);
  d.rhs = AffineFunctional(
      {{"source", [](const Parameter& mu) { return 10.0 * mu[2]; }, assemble_cell_load(grid, all), true}});
  d.output = assemble_cell_average(grid, all);
  for (Index node = 0; node < grid.node_count(); ++node)
    if (on_boundary(grid, node)) d.lifting.constrained.push_back(node);
  return std::make_shared<const FomProblem>(make_fom_problem(d));
}

}  // namespace certrom
