#include "gazebench/checkpoint.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace gazebench::checkpoint {
namespace {

void put_string(std::ostream& out, const std::string& s) {
    tensor_io::put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::size_t limit) {
    const auto n = tensor_io::get_u32(in);
    if (n > limit) throw FormatError("string length out of range");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError("unexpected end of checkpoint");
    return s;
}

} // namespace

const NamedModel& Checkpoint::find(const std::string& name) const {
    for (const auto& m : models) {
        if (m.name == name) return m;
    }
    throw CorruptCheckpoint("checkpoint has no model named '" + name + "'");
}

std::vector<std::uint8_t> encode(const Checkpoint& ckpt) {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, sizeof(kMagic));
    tensor_io::put_u32(out, kVersion);
    put_string(out, ckpt.config.dump());
    tensor_io::put_u32(out, static_cast<std::uint32_t>(ckpt.models.size()));
    for (const auto& m : ckpt.models) {
        put_string(out, m.name);
        tensor_io::put_u64(out, m.state.optimizer.step);
        std::vector<std::pair<std::string, tensor_io::Blob>> tensors;
        m.state.params.for_each([&](const std::string& name, const Tensor& t) {
            tensors.emplace_back(name, tensor_io::Blob::from_tensor(t));
        });
        const auto& opt = m.state.optimizer;
        tensors.emplace_back("adam.m", tensor_io::Blob::from_f64({static_cast<std::uint32_t>(opt.m.size())}, opt.m));
        tensors.emplace_back("adam.v", tensor_io::Blob::from_f64({static_cast<std::uint32_t>(opt.v.size())}, opt.v));
        tensor_io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& [name, blob] : tensors) {
            put_string(out, name);
            tensor_io::write(out, blob);
        }
    }
    const std::string s = out.str();
    return {s.begin(), s.end()};
}

Checkpoint decode(std::span<const std::uint8_t> bytes) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
    try {
        char magic[4] = {};
        in.read(magic, sizeof(magic));
        if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
            throw CorruptCheckpoint("bad checkpoint magic");
        }
        const auto version = tensor_io::get_u32(in);
        if (version != kVersion) {
            throw CorruptCheckpoint("checkpoint version " + std::to_string(version) + " is not supported");
        }
        Checkpoint ckpt;
        ckpt.config = nlohmann::json::parse(get_string(in, bytes.size()));
        const auto model_count = tensor_io::get_u32(in);
        if (model_count > 16) throw CorruptCheckpoint("implausible model count");
        for (std::uint32_t mi = 0; mi < model_count; ++mi) {
            NamedModel m;
            m.name = get_string(in, 256);
            m.state.optimizer.step = tensor_io::get_u64(in);
            const auto tensor_count = tensor_io::get_u32(in);
            std::vector<std::pair<std::string, Tensor>> tensors;
            for (std::uint32_t ti = 0; ti < tensor_count; ++ti) {
                auto name = get_string(in, 256);
                auto blob = tensor_io::read(in);
                if (blob.dtype != tensor_io::DType::F64) throw CorruptCheckpoint("parameter tensor is not f64");
                tensors.emplace_back(std::move(name), blob.to_tensor());
            }
            auto take = [&](const std::string& name) -> Tensor {
                for (auto& [n, t] : tensors) {
                    if (n == name) return t;
                }
                throw CorruptCheckpoint("missing tensor '" + name + "' in model '" + m.name + "'");
            };
            const Tensor proj_b = take("latent3d.bias");
            if (proj_b.rank() != 1 || proj_b.dim(0) % 3 != 0 || proj_b.dim(0) == 0) {
                throw CorruptCheckpoint("latent projection has invalid shape");
            }
            m.state.params = model::ModelParams::zeros(proj_b.dim(0) / 3);
            m.state.params.for_each([&](const std::string& name, Tensor& t) {
                Tensor loaded = take(name);
                if (!loaded.same_shape(t)) throw CorruptCheckpoint("tensor '" + name + "' has wrong shape");
                t = std::move(loaded);
            });
            const Tensor mt = take("adam.m");
            const Tensor vt = take("adam.v");
            m.state.optimizer.m.assign(mt.values().begin(), mt.values().end());
            m.state.optimizer.v.assign(vt.values().begin(), vt.values().end());
            ckpt.models.push_back(std::move(m));
        }
        if (in.peek() != std::char_traits<char>::eof()) throw CorruptCheckpoint("trailing bytes after checkpoint");
        return ckpt;
    } catch (const FormatError& e) {
        throw CorruptCheckpoint(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("config block: ") + e.what());
    }
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = encode(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

} // namespace gazebench::checkpoint
