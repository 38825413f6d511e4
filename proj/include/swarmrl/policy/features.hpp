#pragma once

#include <algorithm>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/observation.hpp"
#include "swarmrl/numkit/types.hpp"

namespace swarmrl::policy {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

/// Populated observation fields plus the fixed input scaling applied before
/// learned layers, and the value ranges used by the histogram/RBF maps.
struct FeatureSpec {
  env::ObservationLayout layout;
  Vector neighbor_scale;
  Vector local_scale;
  Vector evader_scale;
  /// Upper end of the distance axis of histogram/RBF grids.
  double distance_range = 100.0;

  Index neighbor_dim() const { return static_cast<Index>(layout.neighbor.size()); }
  Index local_dim() const { return static_cast<Index>(layout.local.size()); }
  Index evader_dim() const { return static_cast<Index>(layout.evader.size()); }
  bool has_evader_set() const { return !layout.evader.empty(); }

  /// True when the neighbour features are exactly (distance, bearing).
  bool basic_neighbors() const {
    return layout.neighbor == std::vector<env::NeighborField>{env::NeighborField::distance, env::NeighborField::bearing};
  }

  static FeatureSpec from_task(const env::TaskConfig& task, const env::WorldConfig& world) {
    FeatureSpec f;
    f.layout = env::observation_layout(task, world);
    const double len = std::max(world.x_max, world.y_max);
    const double count = std::max(1, task.n_agents - 1);
    f.neighbor_scale.resize(f.neighbor_dim());
    for (Index c = 0; c < f.neighbor_dim(); ++c) {
      double s = 1.0;
      switch (f.layout.neighbor[static_cast<std::size_t>(c)]) {
        case env::NeighborField::distance:
        case env::NeighborField::neighbor_path: s = 1.0 / len; break;
        case env::NeighborField::bearing:
        case env::NeighborField::orientation: s = 1.0 / env::kPi; break;
        case env::NeighborField::rel_vx:
        case env::NeighborField::rel_vy: s = 1.0 / task.v_max; break;
        case env::NeighborField::neighbor_count: s = 1.0 / count; break;
      }
      f.neighbor_scale[c] = s;
    }
    f.local_scale.resize(f.local_dim());
    for (Index c = 0; c < f.local_dim(); ++c) {
      double s = 1.0;
      switch (f.layout.local[static_cast<std::size_t>(c)]) {
        case env::LocalField::wall_distance:
        case env::LocalField::evader_distance:
        case env::LocalField::own_path: s = 1.0 / len; break;
        case env::LocalField::wall_bearing:
        case env::LocalField::evader_bearing: s = 1.0 / env::kPi; break;
        case env::LocalField::speed: s = 1.0 / task.v_max; break;
        case env::LocalField::turn_rate: s = 1.0 / task.omega_max; break;
        case env::LocalField::own_count: s = 1.0 / count; break;
      }
      f.local_scale[c] = s;
    }
    f.evader_scale.resize(f.evader_dim());
    for (Index c = 0; c < f.evader_dim(); ++c)
      f.evader_scale[c] = f.layout.evader[static_cast<std::size_t>(c)] == env::EvaderField::distance ? 1.0 / len
                                                                                                     : 1.0 / env::kPi;
    f.distance_range = task.local() ? task.comm_radius : world.max_distance();
    return f;
  }
};

/// A batch of variable-size sets stored as stacked rows; set b owns rows
/// [offsets[b], offsets[b+1]).
struct SetBatch {
  Matrix elements;
  std::vector<Index> offsets{0};

  Index size() const { return static_cast<Index>(offsets.size()) - 1; }
  Index count(Index b) const { return offsets[static_cast<std::size_t>(b) + 1] - offsets[static_cast<std::size_t>(b)]; }
  Index begin(Index b) const { return offsets[static_cast<std::size_t>(b)]; }
  Index dim() const { return elements.cols(); }

  static SetBatch single(const Matrix& set) {
    SetBatch s;
    s.elements = set;
    s.offsets = {0, set.rows()};
    return s;
  }
};

/// Builds a SetBatch from a list of sets (each a rows x dim matrix).
inline SetBatch stack_sets(const std::vector<const Matrix*>& sets, Index dim) {
  SetBatch s;
  Index total = 0;
  for (const auto* m : sets) total += m->rows();
  s.elements.resize(total, dim);
  s.offsets.assign(1, 0);
  Index r = 0;
  for (const auto* m : sets) {
    numkit::require_shape(m->rows() == 0 || m->cols() == dim, "stack_sets: element dimension mismatch");
    if (m->rows() > 0) s.elements.middleRows(r, m->rows()) = *m;
    r += m->rows();
    s.offsets.push_back(r);
  }
  return s;
}

/// Network input for a batch of agents.
struct ObsBatch {
  SetBatch neighbors;
  SetBatch evaders;
  Matrix local;

  Index size() const { return local.rows(); }
};

inline ObsBatch make_obs_batch(const std::vector<const env::ObservationSet*>& obs, const FeatureSpec& spec) {
  ObsBatch b;
  std::vector<const Matrix*> nbr;
  std::vector<const Matrix*> ev;
  nbr.reserve(obs.size());
  ev.reserve(obs.size());
  b.local.resize(static_cast<Index>(obs.size()), spec.local_dim());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    numkit::require_shape(obs[k]->local.size() == spec.local_dim(), "observation: local feature length mismatch");
    numkit::require_shape(obs[k]->neighbors.rows() == 0 || obs[k]->neighbors.cols() == spec.neighbor_dim(),
                          "observation: neighbour feature length mismatch");
    b.local.row(static_cast<Index>(k)) = obs[k]->local.transpose();
    nbr.push_back(&obs[k]->neighbors);
    ev.push_back(&obs[k]->evaders);
  }
  b.neighbors = stack_sets(nbr, spec.neighbor_dim());
  b.evaders = stack_sets(ev, spec.evader_dim());
  return b;
}

inline ObsBatch make_obs_batch(const std::vector<env::ObservationSet>& obs, const FeatureSpec& spec) {
  std::vector<const env::ObservationSet*> ptrs;
  ptrs.reserve(obs.size());
  for (const auto& o : obs) ptrs.push_back(&o);
  return make_obs_batch(ptrs, spec);
}

/// Selects rows of an ObsBatch (with repetition allowed).
inline ObsBatch select_rows(const ObsBatch& src, const std::vector<Index>& rows) {
  ObsBatch out;
  out.local.resize(static_cast<Index>(rows.size()), src.local.cols());
  auto gather = [&rows](const SetBatch& s) {
    SetBatch g;
    Index total = 0;
    for (Index r : rows) total += s.count(r);
    g.elements.resize(total, s.elements.cols());
    g.offsets.assign(1, 0);
    Index at = 0;
    for (Index r : rows) {
      const Index n = s.count(r);
      if (n > 0) g.elements.middleRows(at, n) = s.elements.middleRows(s.begin(r), n);
      at += n;
      g.offsets.push_back(at);
    }
    return g;
  };
  for (std::size_t k = 0; k < rows.size(); ++k) out.local.row(static_cast<Index>(k)) = src.local.row(rows[k]);
  out.neighbors = gather(src.neighbors);
  out.evaders = gather(src.evaders);
  return out;
}

}  // namespace swarmrl::policy
