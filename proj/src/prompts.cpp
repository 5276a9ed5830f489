#include "cce/prompts.hpp"

#include <sstream>

namespace cce {

std::string bracket_list(const std::vector<std::string>& items) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out << ", ";
        out << items[i];
    }
    out << "]";
    return out.str();
}

std::string classification_prompt(const std::vector<std::string>& labels) {
    std::ostringstream categories;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) categories << ", ";
        categories << "'" << labels[i] << "'";
    }
    std::ostringstream out;
    out << "Classify each image in their appropriate class according to the scene they depict. \n"
        << "Valid classes are {" << categories.str()
        << "} and only these, so you need to classify the images in one of these classes.\n"
        << "Pay attention to the semantics that define each class.\n"
        << "Return me only the label of the scene depicted and nothing else.";
    return out.str();
}

std::string selector_step_prompt(const std::vector<std::string>& scene_objects,
                                 const std::vector<std::string>& add_list,
                                 const std::vector<std::string>& remove_list) {
    std::ostringstream out;
    out << "I want to remove some objects and add others. I would like you to find the best "
           "possible edit for the image, but I want only a single edit.\n"
        << "You can choose from the following options:\n"
        << "- Add an object from the \"Add\" list. In this case please give the answer in the "
           "format: [\"add\", \"added_object\", \"target where the added object will appear in "
           "front of\"]. Avoid positional description such as \"over\", \"next to\", \"above\" "
           "etc.\n"
        << "- Remove an object from the \"Remove\" list. In this case please give the answer in "
           "the format: [\"remove\", \"removed_object\", \"the object that is behind the object "
           "when it is removed e.g. wall, floor, background\"].\n"
        << "- Replace an object from the \"Remove\" list with one from the \"Add\" list. In this "
           "case please give the answer in the format: [\"replace\", \"removed_object\", "
           "\"added_object\"].\n"
        << "So, you need to decide whether to add, remove, or replace an object.\n"
        << "For example:\n"
        << "Object list: [couch, lamp, window]\n"
        << "Add list: [bed, curtain, blanket]\n"
        << "Remove list: [lamp, couch]\n"
        << "\n"
        << "Step: Replace couch with bed.\n"
        << "\n"
        << "Another valid step might be:\n"
        << "Step: [\"add\", \"curtain\", \"window\"].\n"
        << "\n"
        << "However, the step [\"add\", \"blanket\", \"couch\"] is not a logical step because the "
           "couch is on the remove list. If we put the blanket on the couch, we would still have "
           "to remove the couch and thus the blanket as well.\n"
        << "\n"
        << "Please respond with only a single step and make the most logical edit you can based "
           "on the image I have provided.\n"
        << "\n"
        << "Object list: " << bracket_list(scene_objects) << "\n"
        << "Add list: " << bracket_list(add_list) << "\n"
        << "Remove list: " << bracket_list(remove_list) << "\n"
        << "Step:";
    return out.str();
}

std::string insert_anchor_prompt(const std::string& object) {
    std::ostringstream out;
    out << "I want to add an object in the image. Please specify what is the object that is "
           "target where the added object will appear in front of. Avoid positional description "
           "such as \"over\", \"next to\", \"above\" etc. Please respond with a single item, "
           "without any additional text. I want to parse this answer automatically, so it is "
           "crucial to return only a single object without any explanation, or additional text!\n"
        << "\n"
        << "For example:\n"
        << "\n"
        << "Add: \"painting\"\n"
        << "Answer: \"wall\"\n"
        << "\n"
        << "Add: \"pillow\"\n"
        << "Answer: \"bed\"\n"
        << "\n"
        << "Add: " << object << "\n"
        << "Answer:";
    return out.str();
}

std::string delete_backdrop_prompt(const std::string& object) {
    std::ostringstream out;
    out << "I want to remove an object from the image. Please specify what is the object that is "
           "behind the object when it is removed e.g. wall, floor, background. Please respond "
           "with a single item, without any additional text. I want to parse this answer "
           "automatically, so it is crucial to return only a single object without any "
           "explanation, or additional text!\n"
        << "\n"
        << "For example:\n"
        << "Remove: \"painting\"\n"
        << "Answer: \"wall\"\n"
        << "\n"
        << "Remove: \"pillow\"\n"
        << "Answer: \"bed\"\n"
        << "\n"
        << "Remove: " << object << "\n"
        << "Answer:";
    return out.str();
}

std::string inpaint_prompt_insert(const std::string& object, const std::string& anchor) {
    return "a " + object + " in front of the " + anchor;
}

std::string inpaint_prompt_delete(const std::string& backdrop) {
    return "the " + backdrop;
}

std::string inpaint_prompt_substitute(const std::string& replacement) {
    return "a " + replacement;
}

std::string default_negative_prompt() {
    return "low quality, blurry, distorted geometry, duplicated objects, artifacts, watermark";
}

} // namespace cce
