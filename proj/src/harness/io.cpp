#include "attnflow/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace attnflow
{
    std::string format_double(double value)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        return buf;
    }

    void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
    {
        const Eigen::Index d = traj.snapshots.empty() ? 0 : traj.initial().dim();
        out << "t,token";
        for (Eigen::Index i = 0; i < d; ++i)
        {
            out << ",c" << i;
        }
        out << '\n';
        for (const auto& snap : traj.snapshots)
        {
            const std::string t = format_double(snap.time);
            for (Eigen::Index k = 0; k < snap.size(); ++k)
            {
                out << t << ',' << k;
                for (Eigen::Index i = 0; i < d; ++i)
                {
                    out << ',' << format_double(snap.points(i, k));
                }
                out << '\n';
            }
        }
    }

    std::vector<ParticleState> read_trajectory_csv(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line) || line.rfind("t,token", 0) != 0)
        {
            throw ParseError("trajectory csv: missing 't,token,...' header");
        }
        const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') - 1);
        std::vector<ParticleState> snaps;
        std::vector<std::vector<double>> cols;
        double current = 0.0;
        auto flush = [&]() {
            if (cols.empty())
            {
                return;
            }
            ParticleState s;
            s.time = current;
            s.points.resize(d, static_cast<Eigen::Index>(cols.size()));
            for (std::size_t k = 0; k < cols.size(); ++k)
            {
                for (Eigen::Index i = 0; i < d; ++i)
                {
                    s.points(i, static_cast<Eigen::Index>(k)) = cols[k][static_cast<std::size_t>(i)];
                }
            }
            snaps.push_back(std::move(s));
            cols.clear();
        };
        std::size_t lineno = 1;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
            {
                continue;
            }
            std::istringstream row(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(row, field, ','))
            {
                fields.push_back(field);
            }
            if (static_cast<Eigen::Index>(fields.size()) != d + 2)
            {
                throw ParseError("trajectory csv: wrong field count on line " + std::to_string(lineno));
            }
            try
            {
                const double t = std::stod(fields[0]);
                const long token = std::stol(fields[1]);
                if (token == 0)
                {
                    flush();
                    current = t;
                }
                std::vector<double> c;
                for (Eigen::Index i = 0; i < d; ++i)
                {
                    c.push_back(std::stod(fields[static_cast<std::size_t>(i + 2)]));
                }
                cols.push_back(std::move(c));
            }
            catch (const std::logic_error&)
            {
                throw ParseError("trajectory csv: unparseable number on line " + std::to_string(lineno));
            }
        }
        flush();
        return snaps;
    }

    json matrix_to_json(const MatrixXd& m)
    {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
        {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j)
            {
                row.push_back(m(i, j));
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

    MatrixXd matrix_from_json(const json& j)
    {
        if (!j.is_array() || j.empty() || !j.front().is_array())
        {
            throw ParseError("matrix: expected a non-empty list of rows");
        }
        const auto rows = static_cast<Eigen::Index>(j.size());
        const auto cols = static_cast<Eigen::Index>(j.front().size());
        MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
        {
            const json& row = j[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            {
                throw ParseError("matrix: ragged rows");
            }
            for (Eigen::Index c = 0; c < cols; ++c)
            {
                const json& v = row[static_cast<std::size_t>(c)];
                if (!v.is_number())
                {
                    throw ParseError("matrix: non-numeric entry");
                }
                m(r, c) = v.get<double>();
            }
        }
        return m;
    }

    json params_to_json(const SystemParams& params)
    {
        json frozen = json::array();
        for (const auto& f : params.frozen)
        {
            frozen.push_back({{"angle", f.angle}, {"weight", f.weight}});
        }
        return {{"Q", matrix_to_json(params.Q)},
                {"K", matrix_to_json(params.K)},
                {"V", matrix_to_json(params.V)},
                {"beta", params.beta},
                {"kind", to_string(params.kind)},
                {"frozen", frozen},
                {"compensated_sum", params.compensated_sum}};
    }

    json config_to_json(const IntegratorConfig& config)
    {
        return {{"method", to_string(config.method)},
                {"dt", config.dt},
                {"t_end", config.t_end},
                {"record_every", config.record_every},
                {"rtol", config.rtol},
                {"atol", config.atol},
                {"renormalize_every_step", config.renormalize_every_step}};
    }

    json trajectory_sidecar(const Trajectory& traj)
    {
        return {{"params", params_to_json(traj.params)},
                {"integrator", config_to_json(traj.config)},
                {"seed", traj.seed},
                {"n", traj.snapshots.empty() ? 0 : traj.initial().size()},
                {"d", traj.snapshots.empty() ? 0 : traj.initial().dim()},
                {"snapshots", traj.snapshots.size()},
                {"steps", traj.steps},
                {"t_final", traj.snapshots.empty() ? 0.0 : traj.final().time},
                {"termination", traj.termination == Termination::ReachedEnd ? "reached_end" : "stop_predicate"}};
    }

    json classification_to_json(const SpectralClassification& cls)
    {
        json eig = json::array();
        for (const auto& l : cls.eigenvalues)
        {
            eig.push_back({l.real(), l.imag()});
        }
        return {{"lambda_max", {cls.lambda_max.real(), cls.lambda_max.imag()}},
                {"multiplicity", cls.multiplicity},
                {"predicted_row", to_string(cls.predicted_row)},
                {"status", status_of(cls.predicted_row)},
                {"is_real", cls.is_real},
                {"max_jordan_block", cls.max_jordan_block},
                {"dim_L", cls.L_basis.cols()},
                {"dim_Lprime", cls.Lprime_basis.cols()},
                {"eigenvalues", eig}};
    }

    json renyi_to_json(const RenyiReport& report)
    {
        json horizons = json::array();
        for (const auto& h : report.horizons)
        {
            horizons.push_back({{"index", h.index}, {"horizon", h.horizon}, {"sufficient_horizon", h.sufficient}});
        }
        return {{"delta", report.delta},
                {"metric", to_string(report.metric)},
                {"index_base", 0},
                {"renyi_indices", report.renyi_indices},
                {"strong_indices", report.strong_indices},
                {"horizons", horizons}};
    }

    json metastability_to_json(const MetastabilityResult& result)
    {
        json centers = json::array();
        for (const auto& c : result.centers)
        {
            centers.push_back({{"index", c.index},
                               {"checked", c.checked},
                               {"separation", c.separation},
                               {"horizon", c.horizon},
                               {"max_displacement", c.max_displacement},
                               {"bound", c.bound},
                               {"partial", c.partial},
                               {"passed", c.passed},
                               {"diagnostic", c.diagnostic}});
        }
        return {{"all_passed", result.all_passed()},
                {"violations", result.violations()},
                {"partial", result.partial},
                {"centers", centers}};
    }

    json clusters_to_json(const ClusterReport& report)
    {
        json clusters = json::array();
        for (const auto& c : report.clusters)
        {
            clusters.push_back({{"representative", std::vector<double>(c.representative.data(),
                                                                       c.representative.data() + c.representative.size())},
                                {"members", c.members}});
        }
        return {{"radius", report.radius},
                {"time", report.time},
                {"count", report.count()},
                {"clusters", clusters},
                {"unassigned", report.unassigned}};
    }

    namespace
    {
        const json& require(const json& obj, const char* key, const std::string& where)
        {
            const auto it = obj.find(key);
            if (it == obj.end())
            {
                throw ParseError(where + ": missing field '" + key + "'");
            }
            return *it;
        }

        HeadSpectrum parse_head(const json& obj, const std::string& where)
        {
            if (!obj.is_object())
            {
                throw ParseError(where + ": expected an object");
            }
            HeadSpectrum h;
            try
            {
                h.model = require(obj, "model", where).get<std::string>();
                h.layer = require(obj, "layer", where).get<long>();
                h.head = require(obj, "head", where).get<long>();
                h.d = require(obj, "d", where).get<long>();
            }
            catch (const json::type_error&)
            {
                throw ParseError(where + ": model must be a string and layer/head/d integers");
            }
            if (h.d < 1)
            {
                throw ParseError(where + ": d must be positive");
            }
            const json& ev = require(obj, "eigenvalues", where);
            if (!ev.is_array())
            {
                throw ParseError(where + ": eigenvalues must be a list of [re, im] pairs");
            }
            for (const auto& pair : ev)
            {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
                {
                    throw ParseError(where + ": eigenvalues must be a list of [re, im] pairs");
                }
                h.eigenvalues.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
            if (static_cast<long>(h.eigenvalues.size()) != h.d)
            {
                throw ParseError(where + ": eigenvalue count " + std::to_string(h.eigenvalues.size())
                                 + " does not match d = " + std::to_string(h.d));
            }
            if (const auto it = obj.find("matrix"); it != obj.end() && !it->is_null())
            {
                MatrixXd m = matrix_from_json(*it);
                if (m.rows() != h.d || m.cols() != h.d)
                {
                    throw ParseError(where + ": matrix must be d x d");
                }
                h.matrix = std::move(m);
            }
            return h;
        }
    }

    std::vector<HeadSpectrum> parse_spectra(const json& j)
    {
        std::vector<HeadSpectrum> heads;
        if (j.is_array())
        {
            for (std::size_t i = 0; i < j.size(); ++i)
            {
                heads.push_back(parse_head(j[i], "spectra[" + std::to_string(i) + "]"));
            }
        }
        else
        {
            heads.push_back(parse_head(j, "spectra"));
        }
        return heads;
    }

    json spectrum_to_json(const HeadSpectrum& head)
    {
        json ev = json::array();
        for (const auto& l : head.eigenvalues)
        {
            ev.push_back({l.real(), l.imag()});
        }
        json out = {{"model", head.model}, {"layer", head.layer}, {"head", head.head}, {"d", head.d}, {"eigenvalues", ev}};
        if (head.matrix)
        {
            out["matrix"] = matrix_to_json(*head.matrix);
        }
        return out;
    }

    void write_series_csv(std::ostream& out, const std::vector<std::pair<double, double>>& series)
    {
        out << "t,value\n";
        for (const auto& [t, v] : series)
        {
            out << format_double(t) << ',' << format_double(v) << '\n';
        }
    }

    void write_text_file(const std::string& path, const std::string& content)
    {
        const std::filesystem::path p(path);
        if (p.has_parent_path())
        {
            std::filesystem::create_directories(p.parent_path());
        }
        std::ofstream out(p, std::ios::binary);
        if (!out)
        {
            throw std::runtime_error("cannot open '" + path + "' for writing");
        }
        out << content;
        if (!out)
        {
            throw std::runtime_error("failed writing '" + path + "'");
        }
    }

    std::string read_text_file(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ParseError("cannot open '" + path + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
}
