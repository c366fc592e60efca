#include "run/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace pixeltext {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size, std::string path)
        : data_(data), size_(size), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                          (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
                          (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
                          (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    void floats(float* dst, std::size_t count) {
        need(count * 4);
        std::memcpy(dst, data_ + pos_, count * 4);
        pos_ += count * 4;
    }

    std::size_t remaining() const { return size_ - pos_; }

    [[noreturn]] void fail(const std::string& message) const {
        throw DataError("checkpoint '" + path_ + "': " + message);
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > size_) {
            fail("truncated file (needed " + std::to_string(n) + " bytes at offset " +
                 std::to_string(pos_) + ", have " + std::to_string(size_ - pos_) + ")");
        }
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string path_;
};

}  // namespace

const CheckpointTensor* CheckpointData::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

void save_checkpoint(const ParamStore& params, const nlohmann::json& meta,
                     const std::string& path) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'P', 'X', 'L', 'M'});
    put_u32(out, kCheckpointVersion);
    std::string meta_str = meta.dump();
    put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
    out.insert(out.end(), meta_str.begin(), meta_str.end());
    put_u32(out, static_cast<std::uint32_t>(params.count()));
    for (const auto& [name, tensor] : params.entries()) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<std::uint8_t>(tensor->rank()));
        for (std::size_t e : tensor->shape) {
            put_u32(out, static_cast<std::uint32_t>(e));
        }
        std::size_t off = out.size();
        out.resize(off + tensor->size() * 4);
        std::memcpy(out.data() + off, tensor->data.data(), tensor->size() * 4);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw DataError("checkpoint: cannot open '" + path + "' for writing");
    }
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    if (!file) {
        throw DataError("checkpoint: write failed for '" + path + "'");
    }
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw DataError("checkpoint: cannot open '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());
    Reader r(bytes.data(), bytes.size(), path);

    if (r.bytes(4) != "PXLM") {
        r.fail("bad magic, not a checkpoint file");
    }
    CheckpointData data;
    data.version = r.u32();
    if (data.version != kCheckpointVersion) {
        r.fail("unsupported format version " + std::to_string(data.version) +
               " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
    }
    std::uint32_t meta_len = r.u32();
    std::string meta_str = r.bytes(meta_len);
    try {
        data.meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("metadata is not valid JSON: ") + e.what());
    }
    std::uint32_t count = r.u32();
    data.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointTensor t;
        std::uint32_t name_len = r.u32();
        t.name = r.bytes(name_len);
        std::uint8_t rank = r.u8();
        std::size_t total = 1;
        for (std::uint8_t a = 0; a < rank; ++a) {
            std::uint32_t extent = r.u32();
            if (extent == 0) {
                r.fail("tensor '" + t.name + "' has a zero extent");
            }
            t.shape.push_back(extent);
            total *= extent;
        }
        t.values.resize(total);
        r.floats(t.values.data(), total);
        data.tensors.push_back(std::move(t));
    }
    if (r.remaining() != 0) {
        r.fail("file length does not match the tensor table (" +
               std::to_string(r.remaining()) + " trailing bytes)");
    }
    return data;
}

std::size_t apply_checkpoint(ParamStore& params, const CheckpointData& data) {
    std::size_t applied = 0;
    for (auto& [name, tensor] : params.entries()) {
        const CheckpointTensor* stored = data.find(name);
        if (!stored) {
            continue;
        }
        if (stored->shape != tensor->shape) {
            throw DataError("checkpoint: tensor '" + name + "' has shape " +
                            shape_string(stored->shape) + " but the model expects " +
                            shape_string(tensor->shape));
        }
        tensor->data = stored->values;
        ++applied;
    }
    if (applied == 0) {
        throw DataError("checkpoint: no tensor names match the model (wrong file?)");
    }
    return applied;
}

}  // namespace pixeltext
