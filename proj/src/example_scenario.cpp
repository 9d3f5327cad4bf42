#include <cmath>

#include "ctrace/analysis.hpp"
#include "ctrace/error.hpp"

namespace ctrace {

std::vector<ExampleRealization> example_realizations(const ExampleScenario& s) {
  // w is known to be infected; its own event has conditional probability 1
  std::vector<ExampleRealization> out;
  for (int mask = 0; mask < 16; ++mask) {
    ExampleRealization r;
    r.x_infected = mask & 1;
    r.y_infected = mask & 2;
    r.z_exists = mask & 4;
    r.z_infected = mask & 8;
    double p = (r.x_infected ? s.p_x : 1.0 - s.p_x) * (r.y_infected ? s.p_y : 1.0 - s.p_y) *
               (r.z_exists ? s.q : 1.0 - s.q);
    // z can only be infected by an infected x that met it
    const bool z_possible = r.x_infected && r.z_exists;
    if (z_possible) {
      p *= r.z_infected ? s.p_z : 1.0 - s.p_z;
    } else if (r.z_infected) {
      p = 0.0;
    }
    if (p > 0.0) {
      r.probability = p;
      out.push_back(r);
    }
  }
  return out;
}

double example_realization_benefit(const ExampleRealization& r, std::string_view sequence) {
  double total = 0.0;
  int day = 1;
  for (char c : sequence) {
    int infected_day = 0;
    bool infected = false;
    switch (c) {
      case 'x':
      case 'X':
        infected = r.x_infected;
        infected_day = -1;
        break;
      case 'y':
      case 'Y':
        infected = r.y_infected;
        infected_day = 0;
        break;
      case 'z':
      case 'Z':
        // z is only reachable through an infected x that met it
        if (!(r.x_infected && r.z_exists)) continue;
        infected = r.z_infected;
        infected_day = 0;
        break;
      default:
        throw Error(ErrorCode::InvalidParameter, "sequence letters must be x, y or z");
    }
    if (infected) total += std::pow(2.0, -(day - infected_day) + 1);
    ++day;
  }
  return total;
}

std::vector<ExamplePolicyValue> example_enumerate(const ExampleScenario& s) {
  std::vector<ExamplePolicyValue> out{{"YXZ", 0.0}, {"XZY", 0.0}, {"XYZ", 0.0}};
  const auto realizations = example_realizations(s);
  for (auto& pv : out)
    for (const auto& r : realizations) pv.value += r.probability * example_realization_benefit(r, pv.name);
  return out;
}

ModelSpec example_general_spec(const ExampleScenario& s) {
  ModelSpec spec;
  spec.variant = Variant::General;
  spec.horizon = 2;
  spec.discount_rate = std::log(2.0);
  GeneralTables g;
  g.categories = {{"w", 2, 0}, {"x", 1, 0}, {"y", 0, 0}, {"z", 0, 0}};
  g.super_root = 0;
  g.infect.assign(4, std::vector<double>(4, 0.0));
  g.infect[0][1] = s.p_x;
  g.infect[0][2] = s.p_y;
  g.infect[1][3] = s.p_z;
  // x was infected a day before y and z, so its benefit carries one extra halving
  g.benefit = {0.0, 0.5, 1.0, 1.0};
  g.offspring = {{{{}, 1.0}}, {{{3}, s.q}, {{}, 1.0 - s.q}}, {{{}, 1.0}}, {{{}, 1.0}}};
  spec.general = std::move(g);
  return spec;
}

FrontierState example_initial_state(const TypeTable& table) {
  FrontierState s;
  s.counts.assign(table.size(), 0);
  s.counts[table.general_id(0, 1)] = 1;
  s.counts[table.general_id(0, 2)] = 1;
  return s;
}

}  // namespace ctrace
