#include "toxscreen/corpus.hpp"

namespace toxscreen {

std::string_view builtin_taxonomy_csv() {
  static constexpr std::string_view text =
      "term,category\n"
      "Karyomegaly,subcellular\n"
      "Vacuolization (Vacuolation): cytoplasmic,subcellular\n"
      "Eosinophilic body,subcellular\n"
      "Hyaline droplet,subcellular\n"
      "Calcification,subcellular\n"
      "Mineralization,subcellular\n"
      "Deposit: pigment,subcellular\n"
      "Inclusion body: intracytoplasmic,subcellular\n"
      "Change: basophilic,subcellular\n"
      "Alteration: nuclear,subcellular\n"
      "Alteration: cytoplasmic,subcellular\n"
      "Anisonucleosis,subcellular\n"
      "Hyperplasia,cellular\n"
      "Hyperplasia: regenerative,cellular\n"
      "Hypertrophy,cellular\n"
      "Hypoplasia,cellular\n"
      "Degeneration,cellular\n"
      "Degeneration: hydropic,cellular\n"
      "Swelling,cellular\n"
      "Desquamation,cellular\n"
      "Increased mitosis,cellular\n"
      "Regeneration,cellular\n"
      "Dysplasia,cellular\n"
      "Atypia: cellular,cellular\n"
      "Fibrosis,multicellular\n"
      "Edema,multicellular\n"
      "Cyst,multicellular\n"
      "Cyst: hemorrhagic,multicellular\n"
      "Dilatation,multicellular\n"
      "Dilatation: cystic,multicellular\n"
      "Inflammation,multicellular\n"
      "Arteritis,multicellular\n"
      "Tubulitis,multicellular\n"
      "Cellular infiltration,multicellular\n"
      "Cellular infiltration: lymphocyte,multicellular\n"
      "Cellular infiltration: mononuclear cell,multicellular\n"
      "Cellular infiltration: neutrophil,multicellular\n"
      "Proliferation,multicellular\n"
      "Thickening,multicellular\n"
      "Cast: cellular,multicellular\n"
      "Cast: hemoglobinogenous,multicellular\n"
      "Cast: hyaline,multicellular\n"
      "Congestion,multicellular\n"
      "Sclerosis: glomerulus,multicellular\n"
      "Angiectasis,multicellular\n"
      "Arteriolosclerosis,multicellular\n"
      "Necrosis,tissue_lesion\n"
      "Infarct,tissue_lesion\n"
      "Nephroblastoma,tissue_lesion\n"
      "Hydronephrosis,tissue_lesion\n"
      "Scar,tissue_lesion\n"
      "Granuloma,tissue_lesion\n"
      "Hemorrhage,tissue_lesion\n"
      "Death,unspecified\n"
      "Lesion: NOS,unspecified\n"
      "Bacterium,unspecified\n"
      "Not specified,unspecified\n";
  return text;
}

}  // namespace toxscreen
