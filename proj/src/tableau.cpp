#include "gark/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "gark/errors.hpp"

namespace gark {

namespace {

std::string stage_name(const StageRef& s) {
    std::ostringstream os;
    os << "(" << s.partition << "," << s.stage << ")";
    return os.str();
}

}  // namespace

GarkTableau::GarkTableau(std::vector<std::vector<Matrix>> coupling, std::vector<Weights> weights,
                         std::vector<StageRef> schedule, int declared_order, std::string name,
                         bool internally_consistent, std::optional<StageRef> stiff_stage)
    : coupling_(std::move(coupling)),
      weights_(std::move(weights)),
      schedule_(std::move(schedule)),
      declared_order_(declared_order),
      name_(std::move(name)),
      internally_consistent_(internally_consistent),
      stiff_stage_(stiff_stage) {
    const auto P = weights_.size();
    if (P == 0) throw InvalidParameter("tableau needs at least one partition");
    if (coupling_.size() != P) throw InvalidParameter("coupling must have one row per partition");
    for (std::size_t q = 0; q < P; ++q) {
        if (weights_[q].size() == 0) throw InvalidParameter("every partition needs at least one stage");
        if (coupling_[q].size() != P) throw InvalidParameter("coupling must be P x P blocks");
        for (std::size_t m = 0; m < P; ++m) {
            if (coupling_[q][m].rows() != weights_[q].size() ||
                coupling_[q][m].cols() != weights_[m].size()) {
                throw InvalidParameter("coupling block (" + std::to_string(q) + "," +
                                       std::to_string(m) + ") has the wrong shape");
            }
        }
    }
    for (const auto& s : schedule_) {
        if (s.partition < 0 || s.partition >= static_cast<int>(P) || s.stage < 0 ||
            s.stage >= weights_[s.partition].size()) {
            throw InvalidParameter("schedule entry " + stage_name(s) + " out of range");
        }
    }
    if (stiff_stage_) {
        const auto& s = *stiff_stage_;
        if (s.partition < 0 || s.partition >= static_cast<int>(P) || s.stage < 0 ||
            s.stage >= weights_[s.partition].size()) {
            throw InvalidParameter("stiff stage " + stage_name(s) + " out of range");
        }
    }
    if (declared_order_ < 1) throw InvalidParameter("declared order must be positive");
}

int GarkTableau::total_stages() const noexcept {
    int s = 0;
    for (const auto& w : weights_) s += static_cast<int>(w.size());
    return s;
}

Eigen::VectorXd GarkTableau::abscissae(int q, int m) const {
    return a(q, m).rowwise().sum();
}

double GarkTableau::stage_time_fraction(int q, int i) const {
    return coupling_[q][q].row(i).sum();
}

bool ValidationReport::has(const std::string& invariant) const {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const ValidationIssue& v) { return v.invariant == invariant; });
}

double imex22_default_gamma() { return 1.0 - std::sqrt(2.0) / 2.0; }

GarkTableau build_imex22(double gamma, double alpha) {
    if (alpha == 0.0) throw InvalidParameter("imex22 requires alpha != 0");
    const double g1 = 1.0 - std::sqrt(2.0) / 2.0;
    const double g2 = 1.0 + std::sqrt(2.0) / 2.0;
    if (std::abs(gamma - g1) > 1e-12 && std::abs(gamma - g2) > 1e-12) {
        std::cerr << "warning: imex22 gamma=" << gamma
                  << " is not 1 -+ sqrt(2)/2; the method is not second order\n";
    }
    using M = Eigen::MatrixXd;
    M aEE = M::Zero(2, 2), aEI = M::Zero(2, 2), aIE = M::Zero(2, 2), aII = M::Zero(2, 2);
    aEE(1, 0) = 1.0 / (2.0 * alpha);
    aEI(1, 0) = 1.0 / (2.0 * alpha);
    aIE(0, 0) = gamma;
    aIE(1, 0) = 1.0 - alpha;
    aIE(1, 1) = alpha;
    aII(0, 0) = gamma;
    aII(1, 0) = 1.0 - gamma;
    aII(1, 1) = gamma;
    Eigen::VectorXd bE(2), bI(2);
    bE << 1.0 - alpha, alpha;
    bI << 1.0 - gamma, gamma;
    std::vector<StageRef> schedule{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    return GarkTableau({{aEE, aEI}, {aIE, aII}}, {bE, bI}, schedule, 2, "imex22", true,
                       StageRef{1, 1});
}

GarkTableau build_imex22() {
    const double g = imex22_default_gamma();
    return build_imex22(g, g);
}

GarkTableau permute_partitions(const GarkTableau& t, const std::vector<int>& perm) {
    const int P = t.num_partitions();
    if (static_cast<int>(perm.size()) != P) throw InvalidParameter("permutation has the wrong length");
    std::vector<int> inverse(P, -1);
    for (int p = 0; p < P; ++p) {
        if (perm[p] < 0 || perm[p] >= P || inverse[perm[p]] != -1) {
            throw InvalidParameter("not a permutation of the partitions");
        }
        inverse[perm[p]] = p;
    }
    std::vector<std::vector<Eigen::MatrixXd>> coupling(P, std::vector<Eigen::MatrixXd>(P));
    std::vector<Eigen::VectorXd> weights(P);
    for (int q = 0; q < P; ++q) {
        weights[q] = t.b(perm[q]);
        for (int m = 0; m < P; ++m) coupling[q][m] = t.a(perm[q], perm[m]);
    }
    std::vector<StageRef> schedule;
    for (const auto& s : t.schedule()) schedule.push_back({inverse[s.partition], s.stage});
    std::optional<StageRef> stiff;
    if (t.stiff_stage()) stiff = StageRef{inverse[t.stiff_stage()->partition], t.stiff_stage()->stage};
    return GarkTableau(std::move(coupling), std::move(weights), std::move(schedule),
                       t.declared_order(), t.name(), t.declares_internal_consistency(), stiff);
}

AdjointTableau adjoint_coefficients(const GarkTableau& t) {
    const int P = t.num_partitions();
    for (int q = 0; q < P; ++q) {
        for (int i = 0; i < t.stages(q); ++i) {
            if (t.b(q)(i) == 0.0) {
                throw UnsupportedTableau("adjoint coefficients need nonzero weights; b is zero at " +
                                             stage_name({q, i}),
                                         q, i);
            }
        }
    }
    std::vector<std::vector<Eigen::MatrixXd>> abar(P, std::vector<Eigen::MatrixXd>(P));
    for (int m = 0; m < P; ++m) {
        for (int q = 0; q < P; ++q) {
            Eigen::MatrixXd block(t.stages(m), t.stages(q));
            for (int i = 0; i < t.stages(m); ++i) {
                for (int j = 0; j < t.stages(q); ++j) {
                    block(i, j) = t.b(q)(j) * t.a(q, m, j, i) / t.b(m)(i);
                }
            }
            abar[m][q] = std::move(block);
        }
    }
    std::vector<Eigen::VectorXd> bbar;
    for (int q = 0; q < P; ++q) bbar.push_back(t.b(q));
    std::vector<StageRef> reversed(t.schedule().rbegin(), t.schedule().rend());
    return AdjointTableau(GarkTableau(std::move(abar), std::move(bbar), std::move(reversed),
                                      t.declared_order(), t.name() + "-adjoint", false));
}

ValidationReport validate(const GarkTableau& t) {
    ValidationReport report;
    const int P = t.num_partitions();

    if (t.declares_internal_consistency()) {
        for (int q = 0; q < P; ++q) {
            const Eigen::VectorXd c0 = t.abscissae(q, 0);
            for (int m = 1; m < P; ++m) {
                const double r = (t.abscissae(q, m) - c0).cwiseAbs().maxCoeff();
                if (r > kCoefficientTolerance) {
                    report.issues.push_back({"internal_consistency",
                                             "c^(" + std::to_string(q) + "," + std::to_string(m) +
                                                 ") differs from c^(" + std::to_string(q) + ",0)",
                                             r});
                }
            }
        }
    }

    // Schedule: a permutation of all stages in which every dependency precedes its user.
    std::map<std::pair<int, int>, int> position;
    bool permutation_ok = static_cast<int>(t.schedule().size()) == t.total_stages();
    for (std::size_t k = 0; k < t.schedule().size(); ++k) {
        const auto& s = t.schedule()[k];
        if (!position.emplace(std::make_pair(s.partition, s.stage), static_cast<int>(k)).second) {
            permutation_ok = false;
        }
    }
    if (!permutation_ok || static_cast<int>(position.size()) != t.total_stages()) {
        report.issues.push_back({"schedule", "schedule is not a permutation of all stages",
                                 std::abs(static_cast<double>(t.total_stages()) -
                                          static_cast<double>(position.size()))});
    } else {
        for (int q = 0; q < P; ++q) {
            for (int i = 0; i < t.stages(q); ++i) {
                const int here = position.at({q, i});
                for (int m = 0; m < P; ++m) {
                    for (int j = 0; j < t.stages(m); ++j) {
                        if ((m == q && j == i) || t.a(q, m, i, j) == 0.0) continue;
                        if (position.at({m, j}) > here) {
                            report.issues.push_back(
                                {"schedule",
                                 "stage " + stage_name({q, i}) + " depends on later stage " +
                                     stage_name({m, j}),
                                 std::abs(t.a(q, m, i, j))});
                        }
                    }
                }
            }
        }
    }

    if (t.declared_order() >= 1) {
        for (int q = 0; q < P; ++q) {
            const double r = std::abs(t.b(q).sum() - 1.0);
            if (r > kCoefficientTolerance) {
                report.issues.push_back(
                    {"order1", "sum of b^(" + std::to_string(q) + ") differs from 1", r});
            }
        }
    }
    if (t.declared_order() >= 2) {
        for (int q = 0; q < P; ++q) {
            for (int m = 0; m < P; ++m) {
                const double r = std::abs(t.b(q).dot(t.abscissae(q, m)) - 0.5);
                if (r > kCoefficientTolerance) {
                    report.issues.push_back({"order2",
                                             "b^(" + std::to_string(q) + ") . c^(" +
                                                 std::to_string(q) + "," + std::to_string(m) +
                                                 ") differs from 1/2",
                                             r});
                }
            }
        }
    }

    if (t.stiff_stage()) {
        const auto [qs, is] = *t.stiff_stage();
        double r = 0.0;
        for (int m = 0; m < P; ++m) {
            r = std::max(r, (t.a(qs, m).row(is).transpose() - t.b(m)).cwiseAbs().maxCoeff());
        }
        if (r > kCoefficientTolerance) {
            report.issues.push_back(
                {"stiff_accuracy", "row of stage " + stage_name(*t.stiff_stage()) + " differs from b", r});
        }
    }
    return report;
}

nlohmann::json to_json(const GarkTableau& t) {
    using nlohmann::json;
    json j;
    j["name"] = t.name();
    j["num_partitions"] = t.num_partitions();
    json counts = json::array(), coupling = json::array(), weights = json::array(),
         abscissae = json::array();
    for (int q = 0; q < t.num_partitions(); ++q) {
        counts.push_back(t.stages(q));
        weights.push_back(std::vector<double>(t.b(q).data(), t.b(q).data() + t.b(q).size()));
        json row = json::array(), crow = json::array();
        for (int m = 0; m < t.num_partitions(); ++m) {
            json block = json::array();
            for (int i = 0; i < t.stages(q); ++i) {
                json r = json::array();
                for (int k = 0; k < t.stages(m); ++k) r.push_back(t.a(q, m, i, k));
                block.push_back(r);
            }
            row.push_back(block);
            const Eigen::VectorXd c = t.abscissae(q, m);
            crow.push_back(std::vector<double>(c.data(), c.data() + c.size()));
        }
        coupling.push_back(row);
        abscissae.push_back(crow);
    }
    j["stage_counts"] = counts;
    j["coupling"] = coupling;
    j["weights"] = weights;
    j["abscissae"] = abscissae;
    j["declared_order"] = t.declared_order();
    json sched = json::array();
    for (const auto& s : t.schedule()) sched.push_back({s.partition, s.stage});
    j["stage_schedule"] = sched;
    j["internally_consistent"] = t.declares_internal_consistency();
    if (t.stiff_stage()) {
        j["stiff_stage"] = {t.stiff_stage()->partition, t.stiff_stage()->stage};
    } else {
        j["stiff_stage"] = nullptr;
    }
    json flags = json::array();
    for (int q = 0; q < t.num_partitions(); ++q) {
        json f = json::array();
        for (int i = 0; i < t.stages(q); ++i) f.push_back(t.is_implicit(q, i));
        flags.push_back(f);
    }
    j["implicit_flags"] = flags;
    return j;
}

GarkTableau tableau_from_json(const nlohmann::json& j) {
    try {
        const auto& weights_j = j.at("weights");
        const int P = static_cast<int>(weights_j.size());
        std::vector<Eigen::VectorXd> weights;
        for (const auto& w : weights_j) {
            const auto v = w.get<std::vector<double>>();
            weights.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        const auto& cj = j.at("coupling");
        if (static_cast<int>(cj.size()) != P) throw InvalidParameter("coupling must have P rows of blocks");
        std::vector<std::vector<Eigen::MatrixXd>> coupling(P);
        for (int q = 0; q < P; ++q) {
            if (static_cast<int>(cj[q].size()) != P) throw InvalidParameter("coupling must be P x P blocks");
            for (int m = 0; m < P; ++m) {
                const auto rows = cj[q][m].get<std::vector<std::vector<double>>>();
                Eigen::MatrixXd block(static_cast<Eigen::Index>(rows.size()),
                                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    if (static_cast<Eigen::Index>(rows[r].size()) != block.cols()) {
                        throw InvalidParameter("ragged coupling block");
                    }
                    for (std::size_t c = 0; c < rows[r].size(); ++c) block(r, c) = rows[r][c];
                }
                coupling[q].push_back(std::move(block));
            }
        }
        std::vector<StageRef> schedule;
        for (const auto& s : j.at("stage_schedule")) {
            schedule.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
        }
        std::optional<StageRef> stiff;
        if (j.contains("stiff_stage") && !j["stiff_stage"].is_null()) {
            stiff = StageRef{j["stiff_stage"].at(0).get<int>(), j["stiff_stage"].at(1).get<int>()};
        }
        return GarkTableau(std::move(coupling), std::move(weights), std::move(schedule),
                           j.value("declared_order", 1), j.value("name", std::string("custom")),
                           j.value("internally_consistent", false), stiff);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("malformed tableau document: ") + e.what());
    }
}

}  // namespace gark
