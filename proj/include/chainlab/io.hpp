// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_IO_HPP
#define CHAINLAB_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "chainlab/center_lift.hpp"
#include "chainlab/scenario.hpp"

namespace chainlab {

inline nlohmann::json to_json(const TorusPoint& p) {
    return {p.base.x(), p.base.y(), p.fiber};
}

inline TorusPoint torus_point_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

/// Lifted chains serialize to (anchors, jump times, chart offsets) for
/// scenario replay.
inline nlohmann::json to_json(const LiftedChain& lc) {
    nlohmann::json j;
    j["epsilon"] = lc.epsilon();
    j["anchors"] = nlohmann::json::array();
    for (const auto& a : lc.anchors()) j["anchors"].push_back(to_json(a));
    j["jump_times"] = lc.jump_times();
    std::vector<int> offs;
    for (int i = 0; i < lc.steps(); ++i) offs.push_back(lc.lift_offset(i));
    j["chart_offsets"] = offs;
    return j;
}

inline LiftedChain lifted_chain_from_json(const SkewProductSystem& sys, const nlohmann::json& j) {
    CenterPseudoOrbit chain;
    chain.epsilon = j.at("epsilon").get<double>();
    for (const auto& a : j.at("anchors")) chain.points.push_back(torus_point_from_json(a));
    chain.jumpTimes = j.at("jump_times").get<std::vector<double>>();
    LiftedChain lc(sys, chain);
    const auto offs = j.at("chart_offsets").get<std::vector<int>>();
    for (int i = 0; i < lc.steps(); ++i)
        if (offs.at(std::size_t(i)) != lc.lift_offset(i))
            throw std::invalid_argument("lifted chain json: chart offset mismatch at step " +
                                        std::to_string(i));
    return lc;
}

inline nlohmann::json to_json(const KRunRow& r) {
    nlohmann::json j;
    j["k"] = r.k;
    j["eps"] = r.eps;
    j["n"] = r.n;
    j["tau_k"] = r.tau_k;
    j["d_x0_pk"] = r.d_x0_pk;
    j["d_xn_end"] = r.d_xn_end;
    j["d_x_pk"] = r.d_x_pk;
    j["d_y_end"] = r.d_y_end;
    j["bound"] = r.bound;
    j["margin"] = r.margin;
    j["shadow_L"] = r.shadowL;
    j["section_L"] = r.sectionL;
    j["displacement_residual"] = r.dispResidual;
    j["degenerate"] = r.degenerate;
    j["periodic"] = r.periodic;
    j["periodic_residual"] = r.periodicResidual;
    j["pass"] = r.pass;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline nlohmann::json to_json(const RunRecord& rec) {
    nlohmann::json j;
    j["scenario"]["id"] = rec.scenario.id;
    j["scenario"]["preset"] = rec.scenario.preset;
    j["scenario"]["x"] = to_json(rec.scenario.x);
    j["scenario"]["y"] = to_json(rec.scenario.y);
    j["scenario"]["periodic"] = rec.scenario.periodic;
    j["scenario"]["ks"] = rec.scenario.ks;
    j["scenario"]["eps_explicit"] = rec.scenario.epsExplicit;
    j["scenario"]["resolution"] = rec.scenario.resolution;
    j["scenario"]["seed"] = rec.scenario.seed;
    j["attainable"] = rec.attainable;
    if (!rec.attainNote.empty()) j["note"] = rec.attainNote;
    j["coarse_chain_length"] = rec.coarseChainLength;
    j["coarse_eps"] = rec.coarseEps;
    j["elapsed_seconds"] = rec.elapsedSeconds;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rec.rows) j["rows"].push_back(to_json(r));
    j["all_pass"] = rec.all_pass();
    return j;
}

}  // namespace chainlab

#endif  // CHAINLAB_IO_HPP
