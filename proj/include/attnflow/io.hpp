#pragma once

// Serialization of trajectories, classifications, Renyi reports and cluster
// reports; parsing of the head-spectra JSON.

#include "attnflow/integrator.hpp"
#include "attnflow/metrics.hpp"
#include "attnflow/renyi.hpp"
#include "attnflow/spectral.hpp"

#include <json.hpp>

#include <complex>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace attnflow
{
    using json = nlohmann::json;

    /// Malformed input files and specs (CLI exit code 2).
    class ParseError : public std::invalid_argument
    {
      public:
        using std::invalid_argument::invalid_argument;
    };

    /// "%.17g": enough digits for every double to round-trip.
    std::string format_double(double value);

    /// Header `t,token,c0,...,c{d-1}`, one row per token per snapshot.
    void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

    /// Snapshots read back from write_trajectory_csv output (points only).
    std::vector<ParticleState> read_trajectory_csv(std::istream& in);

    json matrix_to_json(const MatrixXd& m);
    MatrixXd matrix_from_json(const json& j);

    json params_to_json(const SystemParams& params);
    json config_to_json(const IntegratorConfig& config);

    /// Params, integrator config, seed and run bookkeeping of a trajectory.
    json trajectory_sidecar(const Trajectory& traj);

    json classification_to_json(const SpectralClassification& cls);
    json renyi_to_json(const RenyiReport& report);
    json metastability_to_json(const MetastabilityResult& result);
    json clusters_to_json(const ClusterReport& report);

    struct HeadSpectrum
    {
        std::string model;
        long layer = 0;
        long head = 0;
        long d = 0;
        std::vector<std::complex<double>> eigenvalues;
        std::optional<MatrixXd> matrix;
    };

    /// Accepts a single head object or an array of them. Throws ParseError
    /// naming the offending field.
    std::vector<HeadSpectrum> parse_spectra(const json& j);

    json spectrum_to_json(const HeadSpectrum& head);

    /// `t,value` rows.
    void write_series_csv(std::ostream& out, const std::vector<std::pair<double, double>>& series);

    /// Writes `content` to `path`, creating parent directories.
    void write_text_file(const std::string& path, const std::string& content);
    std::string read_text_file(const std::string& path);
}
