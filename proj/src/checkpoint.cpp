#include <bit>
#include <cstring>
#include <fstream>

#include "fairdisc/errors.hpp"
#include "fairdisc/json_io.hpp"
#include "fairdisc/model.hpp"
#include "fairdisc/nn.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace fairdisc::model {

namespace {
constexpr char kMagic[8] = {'F', 'D', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const std::string& path, const FairModel& model) {
    nlohmann::json header;
    header["format_version"] = 1;
    header["init_seed"] = model.init_seed();
    header["config"] = model.config();
    nlohmann::json manifest = nlohmann::json::array();
    for (const nn::Param* p : model.params().all())
        manifest.push_back({{"name", p->name},
                            {"partition", nn::partition_name(p->partition)},
                            {"shape", p->value.shape()}});
    header["params"] = manifest;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(hs.data(), std::streamsize(hs.size()));
    for (const nn::Param* p : model.params().all())
        out.write(reinterpret_cast<const char*>(p->value.raw()),
                  std::streamsize(p->value.size() * 8));
    if (!out) throw IoError("write failed for '" + path + "'");
}

FairModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw IoError("'" + path + "' is not a checkpoint file (bad magic)");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || hlen == 0 || hlen > (1ull << 30))
        throw IoError("'" + path + "' has a corrupt header length");
    std::string hs(hlen, '\0');
    in.read(hs.data(), std::streamsize(hlen));
    if (!in) throw IoError("'" + path + "' is truncated in the header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const std::exception& e) {
        throw IoError("'" + path + "' header is not valid JSON: " + std::string(e.what()));
    }
    try {
        const int version = header.at("format_version").get<int>();
        if (version != 1)
            throw IoError("'" + path + "' uses unsupported checkpoint format version " +
                          std::to_string(version));
        const ModelConfig cfg = header.at("config").get<ModelConfig>();
        const std::uint64_t seed = header.at("init_seed").get<std::uint64_t>();
        FairModel model(cfg, seed);

        const std::vector<nn::Param*> params = model.params().all();
        const nlohmann::json& manifest = header.at("params");
        if (manifest.size() != params.size())
            throw IoError("'" + path + "' parameter manifest has " +
                          std::to_string(manifest.size()) + " entries, model has " +
                          std::to_string(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const nlohmann::json& entry = manifest.at(i);
            const std::string name = entry.at("name").get<std::string>();
            if (name != params[i]->name)
                throw IoError("'" + path + "' manifest entry " + std::to_string(i) + " is '" +
                              name + "', model expects '" + params[i]->name + "'");
            const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            if (shape != params[i]->value.shape())
                throw IoError("'" + path + "' parameter '" + name + "' has the wrong shape");
            in.read(reinterpret_cast<char*>(params[i]->value.raw()),
                    std::streamsize(params[i]->value.size() * 8));
            if (!in) throw IoError("'" + path + "' is truncated in the parameter data");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "' header is malformed: " + std::string(e.what()));
    }
}

} // namespace fairdisc::model
