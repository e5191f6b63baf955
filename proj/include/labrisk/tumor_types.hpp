#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace labrisk {

// The 45 standardized tumor categories. Variant names from either diagnosis
// source consolidate into these; carcinomas group by organ system.
inline const std::vector<std::string>& standard_tumor_categories() {
  static const std::vector<std::string> cats = {
      "adenocarcinoma_anal_sac", "adenocarcinoma_mammary",
      "adenocarcinoma_other", "basal_cell_tumor", "benign_skin_tumor",
      "carcinoma_gastric", "carcinoma_hepatic", "carcinoma_mammary",
      "carcinoma_nasal", "carcinoma_neuroendocrine", "carcinoma_other",
      "carcinoma_ovarian", "carcinoma_pulmonary", "carcinoma_skin",
      "carcinoma_squamous", "carcinoma_thyroid", "carcinoma_urinary",
      "chondrosarcoma", "cns_tumor", "eye_tumor", "eyelid_tumor", "gist",
      "hair_follicle_tumor", "hemangiosarcoma", "histiocytic_sarcoma",
      "leiomyosarcoma", "leukemia", "liposarcoma", "liver_tumor", "lymphoma",
      "mammary_tumor", "mast_cell_tumor", "melanoma", "nasal_tumor",
      "neuroblastoma", "osteosarcoma", "perianal_adenoma",
      "plasma_cell_neoplasm", "rhabdomyosarcoma", "skin_appendage_tumor",
      "soft_tissue_sarcoma", "spleen_tumor", "testicular_tumor", "thymoma",
      "unknown_neoplasia"};
  return cats;
}

// Lowercase, map every non-alphanumeric run to a single underscore, trim.
// Handles hyphen vs en-dash spelling drift in the raw exports.
inline std::string normalize_tumor_name(std::string_view raw) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char ch : raw) {
    if (std::isalnum(ch)) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(ch)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

namespace detail {
// Normalized raw name -> standardized category, covering both diagnosis
// sources' vocabularies.
inline const std::map<std::string, std::string>& tumor_category_map() {
  static const std::map<std::string, std::string> m = {
      // Endpoint-source vocabulary.
      {"acanthomatous_ameloblastoma", "benign_skin_tumor"},
      {"adenocarcinoma_apocrine_gland_anal_sac", "adenocarcinoma_anal_sac"},
      {"adenocarcinoma_exocrine_pancreatic", "adenocarcinoma_other"},
      {"adenocarcinoma_mammary", "adenocarcinoma_mammary"},
      {"adenocarcinoma_other_not_specified", "adenocarcinoma_other"},
      {"anaplastic_sarcoma", "soft_tissue_sarcoma"},
      {"apocrine_gland_ductal_adenoma", "skin_appendage_tumor"},
      {"brain_tumor", "cns_tumor"},
      {"carcinoma_basal_cell", "basal_cell_tumor"},
      {"carcinoma_basosquamous_cell", "carcinoma_skin"},
      {"carcinoma_choroid_plexus", "cns_tumor"},
      {"carcinoma_gastric", "carcinoma_gastric"},
      {"carcinoma_hepatocellular", "carcinoma_hepatic"},
      {"carcinoma_mammary", "carcinoma_mammary"},
      {"carcinoma_nasal", "carcinoma_nasal"},
      {"carcinoma_neuroendocrine", "carcinoma_neuroendocrine"},
      {"carcinoma_other_not_specified", "carcinoma_other"},
      {"carcinoma_ovarian", "carcinoma_ovarian"},
      {"carcinoma_pulmonary", "carcinoma_pulmonary"},
      {"carcinoma_squamous_cell", "carcinoma_squamous"},
      {"carcinoma_thyroid", "carcinoma_thyroid"},
      {"carcinoma_transitional_cell", "carcinoma_urinary"},
      {"carcinosarcoma_thyroid", "carcinoma_thyroid"},
      {"chondrosarcoma", "chondrosarcoma"},
      {"cns_tumor", "cns_tumor"},
      {"cutaneous_melanoma", "melanoma"},
      {"gastrointestinal_stromal_tumor", "gist"},
      {"hemangiosarcoma_cardiac", "hemangiosarcoma"},
      {"hemangiosarcoma_cutaneous", "hemangiosarcoma"},
      {"hemangiosarcoma_other_not_specified", "hemangiosarcoma"},
      {"hemangiosarcoma_splenic", "hemangiosarcoma"},
      {"hemangiosarcoma_visceral", "hemangiosarcoma"},
      {"histiocytic_sarcoma", "histiocytic_sarcoma"},
      {"leiomyosarcoma", "leiomyosarcoma"},
      {"leukemia", "leukemia"},
      {"liposarcoma", "liposarcoma"},
      {"liver_tumor", "liver_tumor"},
      {"lymphoma_cutaneous", "lymphoma"},
      {"lymphoma_gastrointestinal", "lymphoma"},
      {"lymphoma_multicentric", "lymphoma"},
      {"lymphoma_other_not_specified", "lymphoma"},
      {"malignant_melanoma", "melanoma"},
      {"malignant_pilomatricoma", "hair_follicle_tumor"},
      {"malignant_trichoepithelioma", "hair_follicle_tumor"},
      {"mast_cell_tumor_cutaneous", "mast_cell_tumor"},
      {"mast_cell_tumor_other_not_specified", "mast_cell_tumor"},
      {"mast_cell_tumor_subcutaneous", "mast_cell_tumor"},
      {"meibomian_gland_epithelioma", "eyelid_tumor"},
      {"meningioma", "cns_tumor"},
      {"metastatic_sarcoma", "soft_tissue_sarcoma"},
      {"multiple_myeloma", "plasma_cell_neoplasm"},
      {"myelodysplastic_syndrome", "leukemia"},
      {"nasal_sarcoma", "nasal_tumor"},
      {"nasal_tumor", "nasal_tumor"},
      {"nephroblastoma", "neuroblastoma"},
      {"oral_melanoma", "melanoma"},
      {"osteosarcoma_appendicular", "osteosarcoma"},
      {"osteosarcoma_axial", "osteosarcoma"},
      {"osteosarcoma_other_unspecified", "osteosarcoma"},
      {"pituitary_adenoma", "cns_tumor"},
      {"plasma_cell_tumor", "plasma_cell_neoplasm"},
      {"rhabdomyosarcoma", "rhabdomyosarcoma"},
      {"round_cell_tumor", "unknown_neoplasia"},
      {"sarcoma", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_fibrosarcoma", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_giant_cell_tumor", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_keloidal", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_myxosarcoma", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_other_not_specified", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_perivascular_wall_tumor", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_peripheral_nerve_sheath_tumor",
       "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_spindle_cell_sarcoma", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_synovial_cell_sarcoma", "soft_tissue_sarcoma"},
      {"soft_tissue_sarcoma_undifferentiated_sarcoma", "soft_tissue_sarcoma"},
      {"spleen_tumor", "spleen_tumor"},
      {"testicular_tumor", "testicular_tumor"},
      {"thymoma", "thymoma"},
      {"undifferentiated_malignant_neoplasm", "unknown_neoplasia"},
      {"unknown_neoplasia", "unknown_neoplasia"},
      // Condition-source vocabulary (already snake_case in the raw export).
      {"adrenal_tumor", "carcinoma_neuroendocrine"},
      {"basal_cell_tumor", "basal_cell_tumor"},
      {"bile_duct_tumor", "carcinoma_hepatic"},
      {"bladder_tumor", "carcinoma_urinary"},
      {"brain_spinal_cord_tumor", "cns_tumor"},
      {"breast_or_mammary_tumor", "mammary_tumor"},
      {"eye_tumor", "eye_tumor"},
      {"hair_matrix_tumor", "hair_follicle_tumor"},
      {"heart_tumor", "hemangiosarcoma"},
      {"hemangiosarcoma", "hemangiosarcoma"},
      {"kidney_tumor", "carcinoma_urinary"},
      {"lung_tumor", "carcinoma_pulmonary"},
      {"lymphoma", "lymphoma"},
      {"mast_cell_tumor", "mast_cell_tumor"},
      {"melanoma", "melanoma"},
      {"osteosarcoma", "osteosarcoma"},
      {"pancreatic_tumor", "adenocarcinoma_other"},
      {"perianal_adenoma", "perianal_adenoma"},
      {"pituitary_tumor", "cns_tumor"},
      {"plasmacytoma", "plasma_cell_neoplasm"},
      {"prostate_tumor", "carcinoma_urinary"},
      {"splenic_tumor", "spleen_tumor"},
      {"squamous_cell_carcinoma", "carcinoma_squamous"},
      {"stomach_intestinal_tumor", "carcinoma_gastric"},
      {"thyroid_tumor", "carcinoma_thyroid"},
  };
  return m;
}
}  // namespace detail

struct TumorStandardization {
  std::string category;
  bool known;  // false when the fallback category was assigned
};

// Map a raw tumor type name onto its standardized category. Unlisted
// site-qualified variants still collapse onto their base category when the
// name starts with one; anything else falls back to unknown_neoplasia.
inline TumorStandardization standardize_tumor_type(std::string_view raw) {
  const std::string norm = normalize_tumor_name(raw);
  const auto& table = detail::tumor_category_map();
  if (auto it = table.find(norm); it != table.end())
    return {it->second, true};
  for (const auto& cat : standard_tumor_categories()) {
    if (norm == cat) return {cat, true};
    if (norm.size() > cat.size() && norm.compare(0, cat.size(), cat) == 0 &&
        norm[cat.size()] == '_')
      return {cat, true};
  }
  return {"unknown_neoplasia", false};
}

}  // namespace labrisk
