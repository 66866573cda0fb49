#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "litmeth/error.hpp"
#include "litmeth/model.hpp"

namespace litmeth {

// Checkpoint layout: "LMCP" magic, u32 version, u64 header length, JSON
// header (config plus a tensor directory of name/rows/cols/offset), then
// raw little-endian doubles row-major. Offsets are relative to the start
// of the data section. load(save(p)) is bitwise-equal.

inline constexpr char kCheckpointMagic[4] = {'L', 'M', 'C', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

inline void put_double(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

inline double get_double(const std::string& in, std::size_t pos) {
    return std::bit_cast<double>(get_u64(in, pos));
}

}  // namespace detail

inline nlohmann::ordered_json model_config_to_json(const ModelConfig& config) {
    nlohmann::ordered_json j;
    j["d_model"] = config.d_model;
    j["heads"] = config.num_heads;
    j["layers"] = config.num_layers;
    j["d_ff"] = config.d_ff;
    j["vocab_size"] = config.vocab_size;
    j["max_positions"] = config.max_positions;
    j["num_labels"] = config.num_labels;
    j["dropout"] = config.dropout_rate;
    return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig config;
    config.d_model = j.at("d_model").get<std::size_t>();
    config.num_heads = j.at("heads").get<std::size_t>();
    config.num_layers = j.at("layers").get<std::size_t>();
    config.d_ff = j.at("d_ff").get<std::size_t>();
    config.vocab_size = j.at("vocab_size").get<std::size_t>();
    config.max_positions = j.at("max_positions").get<std::size_t>();
    config.num_labels = j.at("num_labels").get<std::size_t>();
    config.dropout_rate = j.value("dropout", 0.0);
    return config;
}

inline std::string serialize_checkpoint(const ModelParams& params, const ModelConfig& config) {
    nlohmann::ordered_json header;
    header["config"] = model_config_to_json(config);
    header["tensors"] = nlohmann::ordered_json::array();

    std::string data;
    params.for_each_tensor([&](const std::string& name, const Tensor2D& t) {
        nlohmann::ordered_json entry;
        entry["name"] = name;
        entry["rows"] = t.rows;
        entry["cols"] = t.cols;
        entry["offset"] = data.size();
        header["tensors"].push_back(std::move(entry));
        for (double v : t.data) detail::put_double(data, v);
    });

    std::string header_text = header.dump();
    std::string out;
    out.reserve(16 + header_text.size() + data.size());
    out.append(kCheckpointMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u64(out, header_text.size());
    out += header_text;
    out += data;
    return out;
}

struct Checkpoint {
    ModelParams params;
    ModelConfig config;
};

inline Checkpoint parse_checkpoint(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw IncompatibleCheckpointError("not a checkpoint file (bad magic)");
    std::uint32_t version = detail::get_u32(bytes, 4);
    if (version != kCheckpointVersion)
        throw IncompatibleCheckpointError("checkpoint version " + std::to_string(version) +
                                          " is not supported (expected " +
                                          std::to_string(kCheckpointVersion) + ")");
    std::uint64_t header_len = detail::get_u64(bytes, 8);
    if (16 + header_len > bytes.size())
        throw IncompatibleCheckpointError("checkpoint truncated inside the header");

    nlohmann::json header = nlohmann::json::parse(bytes.substr(16, header_len), nullptr, false);
    if (header.is_discarded())
        throw IncompatibleCheckpointError("checkpoint header is not valid JSON");

    Checkpoint ck;
    ck.config = model_config_from_json(header.at("config"));
    ck.config.validate();
    ck.params = ModelParams::zeros(ck.config);

    const std::size_t data_start = 16 + header_len;
    const std::size_t data_size = bytes.size() - data_start;

    std::unordered_map<std::string, const nlohmann::json*> directory;
    for (const auto& entry : header.at("tensors"))
        directory.emplace(entry.at("name").get<std::string>(), &entry);

    // validate everything before populating: no partial loads
    ck.params.for_each_tensor([&](const std::string& name, const Tensor2D& t) {
        auto it = directory.find(name);
        if (it == directory.end())
            throw IncompatibleCheckpointError("checkpoint is missing tensor '" + name + "'");
        const auto& entry = *it->second;
        std::size_t rows = entry.at("rows").get<std::size_t>();
        std::size_t cols = entry.at("cols").get<std::size_t>();
        std::size_t offset = entry.at("offset").get<std::size_t>();
        if (rows != t.rows || cols != t.cols)
            throw IncompatibleCheckpointError("tensor '" + name + "' has shape " +
                                              std::to_string(rows) + "x" + std::to_string(cols) +
                                              ", expected " + t.shape_str());
        if (offset + rows * cols * 8 > data_size)
            throw IncompatibleCheckpointError("checkpoint truncated inside tensor '" + name + "'");
    });

    ck.params.for_each_tensor([&](const std::string& name, Tensor2D& t) {
        std::size_t offset = directory.at(name)->at("offset").get<std::size_t>();
        for (std::size_t i = 0; i < t.data.size(); ++i)
            t.data[i] = detail::get_double(bytes, data_start + offset + i * 8);
    });
    return ck;
}

inline void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    std::string bytes = serialize_checkpoint(params, config);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw IoError("write failure on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

}  // namespace litmeth
