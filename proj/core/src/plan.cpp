#include <algorithm>
#include <cmath>
#include <sstream>

#include "bbi/circuit.hpp"

namespace bbi {

namespace {

struct GateEvent {
  double time = 0.0;  // gate center, s
  int axis = 0;       // 0 = x, 1 = z
  std::string name;
  std::string role;
  int variant = 1;
  bool reversed = false;
  bool negated = false;
};

// Mutable per-arm state while the plan is built.
struct ArmState {
  int v[2] = {0, 0};
  int stored[2] = {0, 0};
  bool held[2] = {false, false};
  int flips[2] = {0, 0};  // mirrors and echoes seen per axis
};

struct Split {
  int event = 0;  // splitting event id, shared by arms split together
  int axis = 0;
  std::string role;
  int parent_v = 0;
  int flips = 0;  // parent's flip count on the axis when split
  int children[2] = {-1, -1};
  bool merged = false;
};

std::string role_of(const Waveform& w) {
  if (!w.meta.role.empty()) return w.meta.role;
  if (!w.meta.gate.empty()) return gate_role(parse_gate_kind(w.meta.gate));
  return "idle";
}

class Planner {
 public:
  Planner(const LatticeConfig& cfg, double duration) : cfg_(cfg) {
    plan_.speed = 4.0 * cfg.recoil_velocity();
    plan_.duration = duration;
    PlanArm root;
    root.segments.push_back({0.0, 0.0, 0.0, 0.0, 0, 0});
    plan_.arms.push_back(root);
    state_.push_back({});
  }

  void apply(const GateEvent& ev, int event_id) {
    advance(ev.time);
    const int a = ev.axis;
    const std::vector<int> leaves = leaf_indices();
    if (ev.role == "splitter" || ev.role == "cb_splitter") {
      if (ev.reversed) {
        merge(ev, a);
        return;
      }
      const bool cb = ev.role == "cb_splitter";
      for (int i : leaves) {
        const ArmState& st = state_[i];
        if (st.held[a] || (cb ? st.v[a] == 0 : st.v[a] != 0)) {
          note(ev, cb ? "needs a moving arm" : "needs an arm at rest", i);
          continue;
        }
        split(i, a, ev.role, event_id, ev.time);
      }
    } else if (ev.role == "asym_splitter") {
      const int dir = asym_direction(ev.variant, cfg_) * (ev.negated ? -1 : 1);
      for (int i : leaves) {
        ArmState& st = state_[i];
        if (!ev.reversed && st.v[a] == 0 && !st.held[a]) {
          set_velocity(i, a, dir, ev.time);
        } else if (ev.reversed && st.v[a] == -dir) {
          set_velocity(i, a, 0, ev.time);
        } else {
          note(ev, ev.reversed ? "found no arm moving against its launch direction" : "needs an arm at rest", i);
        }
      }
    } else if (ev.role == "mirror") {
      for (int i : leaves) {
        ArmState& st = state_[i];
        ++st.flips[a];
        if (st.v[a] == 0) {
          note(ev, "reflects an arm at rest", i);
          continue;
        }
        set_velocity(i, a, -st.v[a], ev.time);
      }
    } else if (ev.role == "split_hold") {
      for (int i : leaves) {
        ArmState& st = state_[i];
        if (!ev.reversed && st.v[a] != 0 && !st.held[a]) {
          st.stored[a] = st.v[a];
          st.held[a] = true;
          set_velocity(i, a, 0, ev.time);
        } else if (ev.reversed && st.held[a]) {
          st.held[a] = false;
          set_velocity(i, a, st.stored[a], ev.time);
        } else {
          note(ev, ev.reversed ? "releases an arm that is not held" : "needs a moving arm", i);
        }
      }
    } else if (ev.role == "echo") {
      for (int i : leaves) {
        ArmState& st = state_[i];
        if (st.held[a]) {
          st.stored[a] = -st.stored[a];
          ++st.flips[a];
        }
      }
    }
  }

  SegmentPlan finish() {
    advance(plan_.duration);
    bool merged_all = !splits_.empty();
    for (const auto& s : splits_) merged_all = merged_all && s.merged;
    if (splits_.empty()) plan_.diagnostics.push_back("no splitter: the circuit has a single arm and no interference");
    for (const auto& s : splits_) {
      if (!s.merged) {
        plan_.diagnostics.push_back("branches " + plan_.arms[s.children[0]].label + " and " +
                                    plan_.arms[s.children[1]].label + " are never recombined");
      }
    }
    // A closed plan ends with every leaf at the same place and velocity.
    const auto leaves = leaf_indices();
    bool together = true;
    for (int i : leaves) {
      const auto& s0 = plan_.arms[leaves[0]].segments.back();
      const auto& s = plan_.arms[i].segments.back();
      together = together && close(s.x0, s0.x0) && close(s.z0, s0.z0) && s.vx == s0.vx && s.vz == s0.vz;
    }
    plan_.closed = merged_all && together && !open_;
    return plan_;
  }

 private:
  bool close(double a, double b) const { return std::abs(a - b) <= 1e-6 * plan_.speed * std::max(plan_.duration, 1e-6) + 1e-15; }

  std::vector<int> leaf_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < plan_.arms.size(); ++i) {
      if (plan_.arms[i].leaf) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  // Extends every leaf's open segment to time t.
  void advance(double t) {
    for (auto& arm : plan_.arms) {
      if (arm.leaf) arm.segments.back().t1 = std::max(arm.segments.back().t1, t);
    }
  }

  void set_velocity(int i, int a, int v, double t) {
    PlanArm& arm = plan_.arms[i];
    state_[i].v[a] = v;
    PlanSegment next = arm.segments.back();
    next.x0 = arm.x_at(t, plan_.speed);
    next.z0 = arm.z_at(t, plan_.speed);
    next.t0 = t;
    next.t1 = t;
    (a == 0 ? next.vx : next.vz) = v;
    if (arm.segments.back().t1 - arm.segments.back().t0 <= 0.0) {
      arm.segments.back() = next;  // zero-length segment, replace in place
    } else {
      arm.segments.push_back(next);
    }
  }

  void split(int i, int a, const std::string& role, int event_id, double t) {
    Split s;
    s.event = event_id;
    s.axis = a;
    s.role = role;
    s.parent_v = state_[i].v[a];
    s.flips = state_[i].flips[a];
    plan_.arms[i].leaf = false;
    const PlanArm parent = plan_.arms[i];
    const ArmState pstate = state_[i];
    const char suffix[2] = {'u', 'l'};
    const int vel[2] = {+1, -1};
    for (int c = 0; c < 2; ++c) {
      PlanArm child;
      child.label = parent.label + suffix[c];
      child.parent = i;
      PlanSegment seg{t, t, parent.x_at(t, plan_.speed), parent.z_at(t, plan_.speed), parent.segments.back().vx,
                      parent.segments.back().vz};
      (a == 0 ? seg.vx : seg.vz) = vel[c];
      child.segments.push_back(seg);
      plan_.arms.push_back(child);
      ArmState st = pstate;
      st.v[a] = vel[c];
      state_.push_back(st);
      s.children[c] = static_cast<int>(plan_.arms.size()) - 1;
    }
    splits_.push_back(s);
  }

  bool descends(int arm, int ancestor) const {
    for (int k = arm; k >= 0; k = plan_.arms[k].parent) {
      if (k == ancestor) return true;
    }
    return false;
  }

  // Reversed splitters merge the most recent unmerged splits of their kind.
  void merge(const GateEvent& ev, int a) {
    int latest = -1;
    for (const auto& s : splits_) {
      if (!s.merged && s.axis == a && s.role == ev.role) latest = std::max(latest, s.event);
    }
    if (latest < 0) {
      note(ev, "has no open branches to recombine", -1);
      return;
    }
    const std::vector<int> leaves = leaf_indices();
    for (auto& s : splits_) {
      if (s.merged || s.axis != a || s.role != ev.role || s.event != latest) continue;
      std::vector<int> group;
      for (int i : leaves) {
        if (descends(i, s.children[0]) || descends(i, s.children[1])) group.push_back(i);
      }
      const double x0 = plan_.arms[group.front()].x_at(ev.time, plan_.speed);
      const double z0 = plan_.arms[group.front()].z_at(ev.time, plan_.speed);
      for (int i : group) {
        const double x = plan_.arms[i].x_at(ev.time, plan_.speed);
        const double z = plan_.arms[i].z_at(ev.time, plan_.speed);
        if (!close(x, x0) || !close(z, z0)) {
          std::ostringstream os;
          os << ev.name << " at t = " << ev.time * 1e6 << " us: arm " << plan_.arms[i].label << " is "
             << std::hypot(x - x0, z - z0) * 1e6 << " um from its sibling at recombination";
          plan_.diagnostics.push_back(os.str());
          open_ = true;
        }
        const int flips = state_[i].flips[a] - s.flips;
        set_velocity(i, a, (flips % 2 == 0) ? s.parent_v : -s.parent_v, ev.time);
      }
      s.merged = true;
    }
  }

  void note(const GateEvent& ev, const std::string& what, int arm) {
    std::ostringstream os;
    os << ev.name << (ev.reversed ? " rev" : "") << " at t = " << ev.time * 1e6 << " us " << what;
    if (arm >= 0 && !plan_.arms[arm].label.empty()) os << " (arm " << plan_.arms[arm].label << ")";
    plan_.diagnostics.push_back(os.str());
    open_ = true;
  }

  LatticeConfig cfg_;
  SegmentPlan plan_;
  std::vector<ArmState> state_;
  std::vector<Split> splits_;
  bool open_ = false;
};

double position_at(const PlanArm& arm, double t, double speed, int axis) {
  const PlanSegment* seg = &arm.segments.front();
  for (const auto& s : arm.segments) {
    if (s.t0 <= t) seg = &s;
  }
  const double p0 = axis == 0 ? seg->x0 : seg->z0;
  const int v = axis == 0 ? seg->vx : seg->vz;
  return p0 + speed * v * (t - seg->t0);
}

}  // namespace

double PlanArm::x_at(double t, double speed) const { return position_at(*this, t, speed, 0); }
double PlanArm::z_at(double t, double speed) const { return position_at(*this, t, speed, 1); }

std::vector<const PlanArm*> SegmentPlan::leaves() const {
  std::vector<const PlanArm*> out;
  for (const auto& a : arms) {
    if (a.leaf) out.push_back(&a);
  }
  return out;
}

const PlanArm* SegmentPlan::leaf(std::string_view label) const {
  for (const auto& a : arms) {
    if (a.leaf && a.label == label) return &a;
  }
  return nullptr;
}

std::vector<PlanSegment> SegmentPlan::path(const PlanArm& leaf) const {
  std::vector<const PlanArm*> chain;
  for (const PlanArm* a = &leaf; a; a = a->parent >= 0 ? &arms[a->parent] : nullptr) chain.push_back(a);
  std::vector<PlanSegment> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (const auto& s : (*it)->segments) {
      if (s.t1 > s.t0) out.push_back(s);
    }
  }
  return out;
}

std::pair<double, double> SegmentPlan::extent(int axis) const {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& arm : arms) {
    for (const auto& s : arm.segments) {
      const double p0 = axis == 0 ? s.x0 : s.z0;
      const int v = axis == 0 ? s.vx : s.vz;
      const double p1 = p0 + speed * v * (s.t1 - s.t0);
      lo = std::min({lo, p0, p1});
      hi = std::max({hi, p0, p1});
    }
  }
  return {lo, hi};
}

double SegmentPlan::max_excursion(int axis) const {
  const auto [lo, hi] = extent(axis);
  return std::max(std::abs(lo), std::abs(hi));
}

double SegmentPlan::loop_area(const PlanArm& leaf) const {
  // 1/2 closed integral of (x dz - z dx); along a straight stretch the
  // integrand is constant.
  double twice = 0.0;
  for (const auto& s : path(leaf)) twice += speed * (s.x0 * s.vz - s.z0 * s.vx) * (s.t1 - s.t0);
  return 0.5 * twice;
}

double SegmentPlan::enclosed_area() const {
  double total = 0.0;
  for (const PlanArm* a : leaves()) total += std::abs(loop_area(*a));
  return total;
}

double SegmentPlan::spacetime_area(const PlanArm& a, const PlanArm& b) const {
  auto integral = [&](const PlanArm& arm) {
    double s = 0.0;
    for (const auto& seg : path(arm)) {
      const double tau = seg.t1 - seg.t0;
      s += seg.x0 * tau + 0.5 * speed * seg.vx * tau * tau;
    }
    return s;
  };
  return integral(a) - integral(b);
}

int asym_direction(int variant, const LatticeConfig& config) {
  const TargetBasis basis = materialize(gate_target(GateKind::AsymBeamsplitter, variant), config);
  const StateVector& t = basis.targets.front();
  const int n = (static_cast<int>(t.size()) - 1) / 2;
  double p = 0.0;
  for (int i = 0; i < t.size(); ++i) p += 2.0 * (i - n) * std::norm(t(i));
  if (std::abs(p) < 1e-6) throw NumericalError("asymmetric splitter target carries no momentum");
  return p > 0.0 ? 1 : -1;
}

SegmentPlan circuit_plan(const Circuit& circuit, const GateLibrary& library, const LatticeConfig& config) {
  const Circuit flat = expand_repeats(circuit);
  std::vector<GateEvent> events;
  double duration = 0.0;
  for (const auto& prog : flat.axes) {
    const int axis = prog.axis == "x" ? 0 : 1;
    std::int64_t t_ns = 0;
    for (const auto& e : prog.elements) {
      if (e.kind == CircuitElement::Kind::Wait) {
        t_ns += e.duration_ns;
        continue;
      }
      const Waveform& w = library.resolve(e.gate);
      const auto len = static_cast<std::int64_t>(std::llround(w.duration() * 1e9));
      GateEvent ev;
      ev.time = static_cast<double>(t_ns) * 1e-9 + 0.5 * w.duration();
      ev.axis = axis;
      ev.name = w.label.empty() ? e.gate : w.label;
      ev.role = role_of(w);
      ev.variant = w.meta.variant > 0 ? w.meta.variant : 1;
      ev.reversed = e.reversed;
      ev.negated = e.negated;
      events.push_back(ev);
      t_ns += len;
    }
    duration = std::max(duration, static_cast<double>(t_ns) * 1e-9);
  }
  std::stable_sort(events.begin(), events.end(), [](const GateEvent& a, const GateEvent& b) { return a.time < b.time; });
  Planner planner(config, duration);
  for (std::size_t i = 0; i < events.size(); ++i) planner.apply(events[i], static_cast<int>(i));
  return planner.finish();
}

}  // namespace bbi
