#include <bit>
#include <cstring>

#include <json.hpp>

#include "base64.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/flow.hpp"
#include "io_util.hpp"

namespace flowplan {

namespace {

constexpr int kFlowFormatVersion = 1;
constexpr const char* kFlowFormatName = "flowplan-flow";

std::vector<std::uint8_t> to_le_bytes(const Vector& v) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(v.size()) * 8);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) out[static_cast<std::size_t>(i) * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return out;
}

Vector from_le_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % 8 != 0) throw FormatError("flow checkpoint: parameter payload is not a whole number of doubles");
    Vector v(static_cast<Eigen::Index>(bytes.size() / 8));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[static_cast<std::size_t>(i) * 8 + b]} << (8 * b);
        v[i] = std::bit_cast<double>(bits);
    }
    return v;
}

}  // namespace

std::string flow_to_json(const FlowModel& model) {
    const auto& l = model.layout();
    nlohmann::ordered_json j;
    j["format"] = kFlowFormatName;
    j["version"] = kFlowFormatVersion;
    j["dim"] = l.dim;
    j["context_dim"] = l.context_dim;
    j["num_blocks"] = l.num_blocks;
    j["split"] = l.split();
    j["hidden"] = l.hidden;
    j["clamp"] = l.clamp;
    j["boundary_eps"] = l.boundary_eps;
    j["param_count"] = model.param_count();
    j["metadata"] = model.metadata();
    j["parameters"] = detail::base64_encode(to_le_bytes(model.parameters()));
    return j.dump(2) + "\n";
}

FlowModel flow_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("flow checkpoint: invalid JSON: ") + e.what());
    }
    try {
        if (j.value("format", std::string{}) != kFlowFormatName)
            throw FormatError("flow checkpoint: missing or unknown format tag");
        const int version = j.at("version").get<int>();
        if (version != kFlowFormatVersion)
            throw FormatError("flow checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                              std::to_string(kFlowFormatVersion) + ")");
        FlowLayout l;
        l.dim = j.at("dim").get<int>();
        l.context_dim = j.at("context_dim").get<int>();
        l.num_blocks = j.at("num_blocks").get<int>();
        l.hidden = j.at("hidden").get<std::vector<int>>();
        l.clamp = j.at("clamp").get<double>();
        l.boundary_eps = j.at("boundary_eps").get<double>();
        FlowModel model(l, 0);
        const Vector params = from_le_bytes(detail::base64_decode(j.at("parameters").get<std::string>()));
        if (static_cast<std::size_t>(params.size()) != model.param_count() ||
            j.at("param_count").get<std::size_t>() != model.param_count())
            throw FormatError("flow checkpoint: parameter count does not match layout");
        model.set_parameters(params);
        model.metadata() = j.at("metadata").get<std::map<std::string, std::string>>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("flow checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("flow checkpoint: ") + e.what());
    }
}

void save_flow(const FlowModel& model, const std::filesystem::path& path) {
    detail::write_file(path, flow_to_json(model));
}

FlowModel load_flow(const std::filesystem::path& path) { return flow_from_json(detail::read_file(path)); }

}  // namespace flowplan
