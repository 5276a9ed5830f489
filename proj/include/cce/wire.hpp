#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace cce {

// Image payloads travel by symbolic reference, file path, or inline base64;
// services differ in convention, so the mode is explicit on the wire.
struct ImagePayload {
    std::string mode;  // "ref" | "path" | "base64"
    std::string data;

    static ImagePayload ref(std::string value) { return {"ref", std::move(value)}; }

    nlohmann::json to_json() const;
    static ImagePayload from_json(const nlohmann::json& j);
    friend bool operator==(const ImagePayload&, const ImagePayload&) = default;
};

struct ClassifyRequest {
    ImagePayload image;
    std::vector<std::string> labels;

    nlohmann::json to_json() const;
    static ClassifyRequest from_json(const nlohmann::json& j);
    friend bool operator==(const ClassifyRequest&, const ClassifyRequest&) = default;
};

// Either a bare label (language-model mode) or a score per label (logit mode).
struct ClassifyResponse {
    std::string label;
    std::map<std::string, double> scores;
    bool has_scores = false;

    nlohmann::json to_json() const;
    static ClassifyResponse from_json(const nlohmann::json& j);
    friend bool operator==(const ClassifyResponse&, const ClassifyResponse&) = default;
};

struct GroundRequest {
    ImagePayload image;
    std::string query;
    double confidence_threshold = 0.3;
    int box_expand_px = 35;
    int mask_blur_px = 10;

    nlohmann::json to_json() const;
    static GroundRequest from_json(const nlohmann::json& j);
    friend bool operator==(const GroundRequest&, const GroundRequest&) = default;
};

struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    nlohmann::json to_json() const;
    static Box from_json(const nlohmann::json& j);
    friend bool operator==(const Box&, const Box&) = default;
};

struct GroundResponse {
    std::vector<Box> boxes;
    std::string mask;  // opaque mask reference or payload

    nlohmann::json to_json() const;
    static GroundResponse from_json(const nlohmann::json& j);
    friend bool operator==(const GroundResponse&, const GroundResponse&) = default;
};

struct InpaintRequest {
    ImagePayload image;
    std::string mask;
    std::string prompt;
    std::string negative_prompt;
    double guidance_scale = 10.0;
    double denoise = 1.0;
    int steps = 40;
    std::string sampler = "DPM++ 2M SDE";
    std::uint64_t seed = 0;
    bool hires_fix = true;  // server-side upscaling pass; no local semantics

    nlohmann::json to_json() const;
    static InpaintRequest from_json(const nlohmann::json& j);
    friend bool operator==(const InpaintRequest&, const InpaintRequest&) = default;
};

struct InpaintResponse {
    ImagePayload image;

    nlohmann::json to_json() const;
    static InpaintResponse from_json(const nlohmann::json& j);
    friend bool operator==(const InpaintResponse&, const InpaintResponse&) = default;
};

struct SelectRequest {
    ImagePayload image;
    std::string prompt;

    nlohmann::json to_json() const;
    static SelectRequest from_json(const nlohmann::json& j);
    friend bool operator==(const SelectRequest&, const SelectRequest&) = default;
};

struct SelectResponse {
    std::string text;

    nlohmann::json to_json() const;
    static SelectResponse from_json(const nlohmann::json& j);
    friend bool operator==(const SelectResponse&, const SelectResponse&) = default;
};

} // namespace cce
