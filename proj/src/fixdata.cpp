#include "salseq/fixdata.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace salseq {

using ordered_json = nlohmann::ordered_json;

std::size_t StimulusRecord::total_fixations() const {
    std::size_t n = 0;
    for (const auto& sp : scanpaths) n += sp.fixations.size();
    return n;
}

std::string to_string(Scheme s) {
    return s == Scheme::Salicon ? "salicon" : "mit";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "salicon") return Scheme::Salicon;
    if (s == "mit") return Scheme::Mit;
    throw ValidationError("unknown scheme '" + s + "' (expected 'salicon' or 'mit')");
}

namespace {

void validate_record(const StimulusRecord& rec) {
    if (rec.width <= 0 || rec.height <= 0) {
        throw ValidationError("stimulus '" + rec.stimulus_id + "': non-positive dimensions " +
                              std::to_string(rec.width) + "x" + std::to_string(rec.height));
    }
    for (const auto& sp : rec.scanpaths) {
        for (const auto& p : sp.fixations) {
            if (p.x < 0 || p.y < 0 || p.x >= rec.width || p.y >= rec.height) {
                std::ostringstream os;
                os << "stimulus '" << rec.stimulus_id << "', observer '" << sp.observer_id
                   << "': fixation (" << p.x << "," << p.y << ") out of bounds for "
                   << rec.width << "x" << rec.height << " stimulus (valid x 0.."
                   << rec.width - 1 << ", y 0.." << rec.height - 1 << ")";
                throw ValidationError(os.str());
            }
        }
    }
}

Dataset dataset_from_parsed(const ordered_json& j) {
    Dataset ds;
    ds.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    std::unordered_set<std::string> seen_ids;
    for (const auto& jr : j.at("records")) {
        StimulusRecord rec;
        rec.stimulus_id = jr.at("stimulus_id").get<std::string>();
        rec.width = jr.at("width").get<int>();
        rec.height = jr.at("height").get<int>();
        for (const auto& jsp : jr.at("scanpaths")) {
            ObserverScanpath sp;
            sp.observer_id = jsp.at("observer_id").get<std::string>();
            for (const auto& jp : jsp.at("fixations")) {
                if (!jp.is_array() || jp.size() != 2) {
                    throw ParseError("stimulus '" + rec.stimulus_id +
                                     "': fixation entries must be [x,y] pairs");
                }
                sp.fixations.push_back({jp[0].get<int>(), jp[1].get<int>()});
            }
            rec.scanpaths.push_back(std::move(sp));
        }
        validate_record(rec);
        if (!seen_ids.insert(rec.stimulus_id).second) {
            throw ValidationError("duplicate stimulus_id '" + rec.stimulus_id + "'");
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

ordered_json dataset_to_ordered_json(const Dataset& ds) {
    ordered_json j;
    j["scheme"] = to_string(ds.scheme);
    j["records"] = ordered_json::array();
    for (const auto& rec : ds.records) {
        ordered_json jr;
        jr["stimulus_id"] = rec.stimulus_id;
        jr["width"] = rec.width;
        jr["height"] = rec.height;
        jr["scanpaths"] = ordered_json::array();
        for (const auto& sp : rec.scanpaths) {
            ordered_json jsp;
            jsp["observer_id"] = sp.observer_id;
            jsp["fixations"] = ordered_json::array();
            for (const auto& p : sp.fixations) {
                jsp["fixations"].push_back({p.x, p.y});
            }
            jr["scanpaths"].push_back(std::move(jsp));
        }
        j["records"].push_back(std::move(jr));
    }
    return j;
}

}  // namespace

Dataset dataset_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    try {
        return dataset_from_parsed(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("schema violation: ") + e.what());
    }
}

std::string dataset_to_json(const Dataset& ds) {
    return dataset_to_ordered_json(ds).dump(2) + "\n";
}

Dataset parse_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return dataset_from_json(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << dataset_to_json(ds);
}

FixationMap aggregate_fixation_map(const StimulusRecord& record, bool skip_first) {
    FixationMap map(record.width, record.height);
    for (const auto& sp : record.scanpaths) {
        std::size_t start = skip_first && !sp.fixations.empty() ? 1 : 0;
        for (std::size_t i = start; i < sp.fixations.size(); ++i) {
            map.set(sp.fixations[i].x, sp.fixations[i].y);
        }
    }
    return map;
}

}  // namespace salseq
