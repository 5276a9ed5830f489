#include "cce/wire.hpp"

#include "cce/errors.hpp"

namespace cce {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
    throw Error(ErrorCode::SchemaMismatch, what);
}

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) bad(std::string("missing field '") + name + "'");
    return j.at(name);
}

std::string string_field(const json& j, const char* name, bool allow_empty = false) {
    const json& v = field(j, name);
    if (!v.is_string()) bad(std::string("field '") + name + "' must be a string");
    std::string s = v.get<std::string>();
    if (s.empty() && !allow_empty) bad(std::string("field '") + name + "' must be non-empty");
    return s;
}

double number_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number()) bad(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

int int_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number_integer()) bad(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

bool bool_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_boolean()) bad(std::string("field '") + name + "' must be a boolean");
    return v.get<bool>();
}

} // namespace

json ImagePayload::to_json() const {
    return json{{"data", data}, {"mode", mode}};
}

ImagePayload ImagePayload::from_json(const json& j) {
    ImagePayload p;
    p.mode = string_field(j, "mode");
    p.data = string_field(j, "data");
    if (p.mode != "ref" && p.mode != "path" && p.mode != "base64") {
        bad("image mode must be one of ref, path, base64");
    }
    return p;
}

json ClassifyRequest::to_json() const {
    return json{{"image", image.to_json()}, {"labels", labels}};
}

ClassifyRequest ClassifyRequest::from_json(const json& j) {
    ClassifyRequest r;
    r.image = ImagePayload::from_json(field(j, "image"));
    const json& ls = field(j, "labels");
    if (!ls.is_array() || ls.empty()) bad("labels must be a non-empty array");
    for (const auto& l : ls) {
        if (!l.is_string() || l.get<std::string>().empty()) bad("labels must be non-empty strings");
        r.labels.push_back(l.get<std::string>());
    }
    return r;
}

json ClassifyResponse::to_json() const {
    if (has_scores) return json{{"scores", scores}};
    return json{{"label", label}};
}

ClassifyResponse ClassifyResponse::from_json(const json& j) {
    ClassifyResponse r;
    bool has_label = j.is_object() && j.contains("label");
    bool has_score_map = j.is_object() && j.contains("scores");
    if (has_label == has_score_map) bad("classify response carries exactly one of label, scores");
    if (has_label) {
        r.label = string_field(j, "label", /*allow_empty=*/true);
    } else {
        const json& s = j.at("scores");
        if (!s.is_object() || s.empty()) bad("scores must be a non-empty object");
        for (auto it = s.begin(); it != s.end(); ++it) {
            if (!it.value().is_number()) bad("scores must map labels to numbers");
            r.scores[it.key()] = it.value().get<double>();
        }
        r.has_scores = true;
    }
    return r;
}

json GroundRequest::to_json() const {
    return json{{"box_expand_px", box_expand_px},
                {"confidence_threshold", confidence_threshold},
                {"image", image.to_json()},
                {"mask_blur_px", mask_blur_px},
                {"query", query}};
}

GroundRequest GroundRequest::from_json(const json& j) {
    GroundRequest r;
    r.image = ImagePayload::from_json(field(j, "image"));
    r.query = string_field(j, "query");
    r.confidence_threshold = number_field(j, "confidence_threshold");
    r.box_expand_px = int_field(j, "box_expand_px");
    r.mask_blur_px = int_field(j, "mask_blur_px");
    if (r.confidence_threshold < 0.0 || r.confidence_threshold > 1.0) {
        bad("confidence_threshold must lie in [0,1]");
    }
    if (r.box_expand_px < 0 || r.mask_blur_px < 0) bad("pixel fields must be non-negative");
    return r;
}

json Box::to_json() const {
    return json{{"h", h}, {"w", w}, {"x", x}, {"y", y}};
}

Box Box::from_json(const json& j) {
    Box b;
    b.x = number_field(j, "x");
    b.y = number_field(j, "y");
    b.w = number_field(j, "w");
    b.h = number_field(j, "h");
    if (b.w < 0.0 || b.h < 0.0) bad("box extent must be non-negative");
    return b;
}

json GroundResponse::to_json() const {
    json boxes_json = json::array();
    for (const Box& b : boxes) boxes_json.push_back(b.to_json());
    return json{{"boxes", boxes_json}, {"mask", mask}};
}

GroundResponse GroundResponse::from_json(const json& j) {
    GroundResponse r;
    const json& bs = field(j, "boxes");
    if (!bs.is_array()) bad("boxes must be an array");
    for (const auto& b : bs) r.boxes.push_back(Box::from_json(b));
    r.mask = string_field(j, "mask");
    return r;
}

json InpaintRequest::to_json() const {
    return json{{"denoise", denoise},
                {"guidance_scale", guidance_scale},
                {"hires_fix", hires_fix},
                {"image", image.to_json()},
                {"mask", mask},
                {"negative_prompt", negative_prompt},
                {"prompt", prompt},
                {"sampler", sampler},
                {"seed", seed},
                {"steps", steps}};
}

InpaintRequest InpaintRequest::from_json(const json& j) {
    InpaintRequest r;
    r.image = ImagePayload::from_json(field(j, "image"));
    r.mask = string_field(j, "mask");
    r.prompt = string_field(j, "prompt");
    r.negative_prompt = string_field(j, "negative_prompt", /*allow_empty=*/true);
    r.guidance_scale = number_field(j, "guidance_scale");
    r.denoise = number_field(j, "denoise");
    r.steps = int_field(j, "steps");
    r.sampler = string_field(j, "sampler");
    const json& s = field(j, "seed");
    if (!s.is_number_unsigned() && !s.is_number_integer()) bad("seed must be an integer");
    r.seed = s.get<std::uint64_t>();
    r.hires_fix = bool_field(j, "hires_fix");
    if (r.guidance_scale <= 0.0) bad("guidance_scale must be positive");
    if (r.denoise < 0.0 || r.denoise > 1.0) bad("denoise must lie in [0,1]");
    if (r.steps < 1) bad("steps must be at least 1");
    return r;
}

json InpaintResponse::to_json() const {
    return json{{"image", image.to_json()}};
}

InpaintResponse InpaintResponse::from_json(const json& j) {
    InpaintResponse r;
    r.image = ImagePayload::from_json(field(j, "image"));
    return r;
}

json SelectRequest::to_json() const {
    return json{{"image", image.to_json()}, {"prompt", prompt}};
}

SelectRequest SelectRequest::from_json(const json& j) {
    SelectRequest r;
    r.image = ImagePayload::from_json(field(j, "image"));
    r.prompt = string_field(j, "prompt");
    return r;
}

json SelectResponse::to_json() const {
    return json{{"text", text}};
}

SelectResponse SelectResponse::from_json(const json& j) {
    SelectResponse r;
    r.text = string_field(j, "text", /*allow_empty=*/true);
    return r;
}

} // namespace cce
