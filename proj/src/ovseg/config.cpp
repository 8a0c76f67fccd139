#include "ovseg/config.hpp"

#include "ovseg/binary_io.hpp"
#include "ovseg/error.hpp"
#include "ovseg/labeling_eval.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

namespace ovseg {

namespace {

std::string num(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || end != value.data() + value.size()) {
        fail(ErrorCode::InvalidArgument, "config: " + key + ": '" + value + "' is not a valid number");
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::size_t p = 0;
    while (p <= value.size()) {
        auto comma = value.find(',', p);
        if (comma == std::string::npos) comma = value.size();
        std::string item = value.substr(p, comma - p);
        const auto a = item.find_first_not_of(' ');
        const auto b = item.find_last_not_of(' ');
        item = a == std::string::npos ? "" : item.substr(a, b - a + 1);
        out.push_back(parse_number<double>(key, item));
        p = comma + 1;
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

struct Field {
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&, const std::string&)> set;
};

template <class T>
Field number_field(T Config::*group, double T::*member) {
    return {[=](const Config& c) { return num((c.*group).*member); },
            [=](Config& c, const std::string& k, const std::string& v) { (c.*group).*member = parse_number<double>(k, v); }};
}

const std::map<std::string, Field>& fields() {
    using std::string;
    static const std::map<string, Field> table = [] {
        std::map<string, Field> t;
        t["fusion.gamma"] = number_field(&Config::fusion, &fusion::FusionParams::gamma);
        t["fusion.delta"] = number_field(&Config::fusion, &fusion::FusionParams::delta);
        t["fusion.voxel_size"] = number_field(&Config::fusion, &fusion::FusionParams::voxel_size);
        t["fusion.dbscan_eps_m"] = number_field(&Config::fusion, &fusion::FusionParams::dbscan_eps_m);
        t["fusion.dbscan_min_pts"] = {
            [](const Config& c) { return std::to_string(c.fusion.dbscan_min_pts); },
            [](Config& c, const string& k, const string& v) { c.fusion.dbscan_min_pts = parse_number<std::size_t>(k, v); }};
        t["fusion.workers"] = {
            [](const Config& c) { return std::to_string(c.fusion.workers); },
            [](Config& c, const string& k, const string& v) { c.fusion.workers = parse_number<std::size_t>(k, v); }};

        t["masks.thresholds"] = {[](const Config& c) { return join(c.mask_thresholds); },
                                 [](Config& c, const string& k, const string& v) { c.mask_thresholds = parse_list(k, v); }};
        t["masks.min_area_fraction"] = {
            [](const Config& c) { return num(c.mask_min_area_fraction); },
            [](Config& c, const string& k, const string& v) { c.mask_min_area_fraction = parse_number<double>(k, v); }};
        t["masks.margin_px"] = {[](const Config& c) { return std::to_string(c.mask_margin_px); },
                                [](Config& c, const string& k, const string& v) { c.mask_margin_px = parse_number<int>(k, v); }};
        t["masks.dbscan_eps_px"] = {
            [](const Config& c) { return num(c.mask_dbscan_eps_px); },
            [](Config& c, const string& k, const string& v) { c.mask_dbscan_eps_px = parse_number<double>(k, v); }};
        t["masks.dbscan_min_pts"] = {
            [](const Config& c) { return std::to_string(c.mask_dbscan_min_pts); },
            [](Config& c, const string& k, const string& v) { c.mask_dbscan_min_pts = parse_number<std::size_t>(k, v); }};

        t["embedding.weights"] = {
            [](const Config& c) {
                const auto& w = c.weights;
                return join({w.mask, w.bbox, w.large, w.huge, w.surroundings});
            },
            [](Config& c, const string& k, const string& v) {
                const auto w = parse_list(k, v);
                require(w.size() == 5, ErrorCode::InvalidArgument, "config: " + k + " needs five weights");
                c.weights = {w[0], w[1], w[2], w[3], w[4]};
            }};

        t["labeling.prompt_template"] = {[](const Config& c) { return c.prompt_template; },
                                         [](Config& c, const string&, const string& v) { c.prompt_template = v; }};
        t["eval.match_radius"] = {
            [](const Config& c) { return num(c.match_radius); },
            [](Config& c, const string& k, const string& v) { c.match_radius = parse_number<double>(k, v); }};

        t["retrieval.top_k"] = {
            [](const Config& c) { return std::to_string(c.retrieval.mining.top_k); },
            [](Config& c, const string& k, const string& v) { c.retrieval.mining.top_k = parse_number<std::size_t>(k, v); }};
        t["retrieval.dedup_overlap"] = {
            [](const Config& c) { return num(c.retrieval.mining.dedup_overlap); },
            [](Config& c, const string& k, const string& v) { c.retrieval.mining.dedup_overlap = parse_number<double>(k, v); }};
        t["retrieval.lambda_occ"] = {
            [](const Config& c) { return num(c.retrieval.view.lambda_occ); },
            [](Config& c, const string& k, const string& v) { c.retrieval.view.lambda_occ = parse_number<double>(k, v); }};
        t["retrieval.depth_tol"] = {
            [](const Config& c) { return num(c.retrieval.view.depth_tol); },
            [](Config& c, const string& k, const string& v) { c.retrieval.view.depth_tol = parse_number<double>(k, v); }};
        t["retrieval.yaw_bins"] = {
            [](const Config& c) { return std::to_string(c.retrieval.n_bins); },
            [](Config& c, const string& k, const string& v) { c.retrieval.n_bins = parse_number<std::size_t>(k, v); }};

        t["gateway.endpoint"] = {[](const Config& c) { return c.gateway.endpoint; },
                                 [](Config& c, const string&, const string& v) { c.gateway.endpoint = v; }};
        t["gateway.model"] = {[](const Config& c) { return c.gateway.model; },
                              [](Config& c, const string&, const string& v) { c.gateway.model = v; }};
        t["gateway.embedding_model"] = {[](const Config& c) { return c.gateway.embedding_model; },
                                        [](Config& c, const string&, const string& v) { c.gateway.embedding_model = v; }};
        t["gateway.timeout_s"] = {
            [](const Config& c) { return num(c.gateway.timeout_s); },
            [](Config& c, const string& k, const string& v) { c.gateway.timeout_s = parse_number<double>(k, v); }};
        t["gateway.max_retries"] = {
            [](const Config& c) { return std::to_string(c.gateway.max_retries); },
            [](Config& c, const string& k, const string& v) { c.gateway.max_retries = parse_number<int>(k, v); }};
        t["gateway.token_env"] = {[](const Config& c) { return c.gateway.token_env; },
                                  [](Config& c, const string&, const string& v) { c.gateway.token_env = v; }};
        t["gateway.max_in_flight"] = {
            [](const Config& c) { return std::to_string(c.gateway.max_in_flight); },
            [](Config& c, const string& k, const string& v) { c.gateway.max_in_flight = parse_number<std::size_t>(k, v); }};
        t["gateway.dim"] = {
            [](const Config& c) { return std::to_string(c.gateway.dim); },
            [](Config& c, const string& k, const string& v) { c.gateway.dim = parse_number<std::size_t>(k, v); }};
        t["mock.seed"] = {[](const Config& c) { return std::to_string(c.mock_seed); },
                          [](Config& c, const string& k, const string& v) { c.mock_seed = parse_number<std::uint64_t>(k, v); }};
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
    const auto it = fields().find(key);
    require(it != fields().end(), ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
    it->second.set(*this, key, value);
}

Config Config::parse(const std::string& text, const std::string& source) {
    Config c;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string line = trim(text.substr(start, end - start));
        if (!line.empty() && line.front() != '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                fail(ErrorCode::Format, source + ": offset " + std::to_string(start) + ": expected 'key = value'");
            }
            try {
                c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            } catch (const Error& e) {
                fail(ErrorCode::Format, source + ": offset " + std::to_string(start) + ": " + e.what());
            }
        }
        start = end + 1;
    }
    c.validate();
    return c;
}

Config Config::load(const std::filesystem::path& path) { return parse(io::read_file(path), path.string()); }

std::string Config::to_text() const {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
    return out;
}

std::string Config::hash() const { return gateway::sha256_hex(to_text()).substr(0, 16); }

void Config::validate() const {
    fusion.validate();
    weights.validate();
    gateway.validate();
    require(!mask_thresholds.empty(), ErrorCode::InvalidArgument, "config: masks.thresholds is empty");
    for (double t : mask_thresholds) {
        require(t > 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "config: mask thresholds must lie in (0, 1]");
    }
    require(mask_min_area_fraction >= 0.0 && mask_min_area_fraction < 1.0, ErrorCode::InvalidArgument,
            "config: masks.min_area_fraction must lie in [0, 1)");
    require(mask_margin_px >= 0, ErrorCode::InvalidArgument, "config: masks.margin_px must be non-negative");
    require(match_radius > 0.0, ErrorCode::InvalidArgument, "config: eval.match_radius must be positive");
    require(retrieval.mining.top_k >= 1, ErrorCode::InvalidArgument, "config: retrieval.top_k must be at least 1");
    require(retrieval.n_bins >= 4, ErrorCode::InvalidArgument, "config: retrieval.yaw_bins must be at least 4");
    labeling::format_prompt(prompt_template, "x");
}

masks::GranularitySchedule Config::schedule(int width, int height) const {
    masks::GranularitySchedule s;
    for (std::size_t k = 0; k < mask_thresholds.size(); ++k) s.levels.push_back(static_cast<double>(k + 1));
    s.thresholds = mask_thresholds;
    const double pixels = static_cast<double>(width) * height;
    s.min_area = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(pixels * mask_min_area_fraction)));
    s.margin_px = mask_margin_px;
    s.dbscan_eps_px = mask_dbscan_eps_px;
    s.dbscan_min_pts = mask_dbscan_min_pts;
    s.validate();
    return s;
}

}  // namespace ovseg
