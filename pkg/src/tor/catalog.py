"""Built-in synthetic disease catalog used by :func:`tor.cases.generate_cases`.

Each disease carries short section fragments that the generator stitches into
a case record. Empty strings mean the modality usually carries no finding.
"""

from __future__ import annotations

# (low, high, weight) inclusive age bands
AGE_BANDS: tuple[tuple[int, int, float], ...] = (
    (18, 44, 0.134),
    (45, 59, 0.301),
    (60, 74, 0.396),
    (75, 90, 0.169),
)

# relative department frequencies
DEPARTMENT_WEIGHTS: dict[str, float] = {
    "oncology": 15.76,
    "gastrointestinal surgery": 13.55,
    "thyroid surgery": 8.82,
}

FEMALE_SHARE = 0.461

# department -> disease -> section fragments
CATALOG: dict[str, dict[str, dict[str, str]]] = {
    "oncology": {
        "Lung adenocarcinoma": {
            "complaint": "cough with blood-streaked sputum for two months",
            "illness": "progressive dry cough, weight loss of 5 kg",
            "exam": "decreased breath sounds over the right upper lobe",
            "lab": "CEA 18.2 ng/mL (elevated); CYFRA21-1 4.9 ng/mL (elevated)",
            "imaging": "CT chest: 3.1 cm spiculated mass in the right upper lobe",
            "pathology": "bronchoscopic biopsy: adenocarcinoma, TTF-1 positive",
        },
        "Hepatocellular carcinoma": {
            "complaint": "right upper abdominal discomfort",
            "illness": "history of chronic hepatitis B for 15 years",
            "exam": "firm liver edge palpable 3 cm below the costal margin",
            "lab": "AFP 612 ng/mL (elevated); ALT 78 U/L (elevated)",
            "imaging": "enhanced CT: arterial-phase enhancing hepatic lesion with washout",
            "pathology": "needle biopsy: trabecular hepatocellular carcinoma",
        },
        "Breast cancer": {
            "complaint": "painless lump in the left breast",
            "illness": "lump noticed three months ago, slowly enlarging",
            "exam": "2 cm hard, poorly mobile mass in the left upper outer quadrant",
            "lab": "CA15-3 41 U/mL (elevated)",
            "imaging": "ultrasound: irregular hypoechoic nodule, BI-RADS 5",
            "pathology": "core biopsy: invasive ductal carcinoma, ER positive",
        },
        "Hypertension": {
            "complaint": "intermittent headache",
            "illness": "blood pressure up to 165/100 mmHg for years",
            "exam": "blood pressure 158/96 mmHg",
            "lab": "",
            "imaging": "echocardiography: mild left ventricular hypertrophy",
            "pathology": "",
        },
        "Hypoproteinemia": {
            "complaint": "lower limb swelling",
            "illness": "poor appetite during the past month",
            "exam": "pitting edema of both ankles",
            "lab": "albumin 28 g/L (low); total protein 52 g/L (low)",
            "imaging": "",
            "pathology": "",
        },
        "Anemia": {
            "complaint": "fatigue and dizziness",
            "illness": "exertional breathlessness for six weeks",
            "exam": "pale conjunctivae",
            "lab": "hemoglobin 86 g/L (low); MCV 74 fL (low)",
            "imaging": "",
            "pathology": "",
        },
        "Lymphoma": {
            "complaint": "enlarged neck nodes",
            "illness": "night sweats and low-grade fever",
            "exam": "multiple rubbery cervical lymph nodes",
            "lab": "LDH 420 U/L (elevated)",
            "imaging": "PET-CT: hypermetabolic cervical and mediastinal nodes",
            "pathology": "excisional biopsy: diffuse large B-cell lymphoma, CD20 positive",
        },
        "Hepatic cyst": {
            "complaint": "",
            "illness": "incidental finding on routine check-up",
            "exam": "",
            "lab": "",
            "imaging": "ultrasound: anechoic thin-walled hepatic lesion, 2.4 cm",
            "pathology": "",
        },
    },
    "gastrointestinal surgery": {
        "Gastric cancer": {
            "complaint": "epigastric pain and early satiety",
            "illness": "black stools twice in the past month",
            "exam": "epigastric tenderness",
            "lab": "CEA 9.1 ng/mL (elevated); fecal occult blood positive",
            "imaging": "CT abdomen: thickening of the gastric antrum wall",
            "pathology": "gastroscopic biopsy: poorly differentiated adenocarcinoma",
        },
        "Colorectal cancer": {
            "complaint": "change in bowel habit with blood in stool",
            "illness": "alternating constipation and diarrhea for four months",
            "exam": "mass felt on digital rectal examination",
            "lab": "CEA 12.4 ng/mL (elevated); hemoglobin 101 g/L (low)",
            "imaging": "CT colonography: annular lesion of the sigmoid colon",
            "pathology": "colonoscopic biopsy: moderately differentiated adenocarcinoma",
        },
        "Chronic gastritis": {
            "complaint": "recurrent upper abdominal bloating",
            "illness": "symptoms worse after meals",
            "exam": "mild epigastric tenderness",
            "lab": "Helicobacter pylori urea breath test positive",
            "imaging": "",
            "pathology": "gastric mucosa biopsy: chronic inflammation",
        },
        "Cholecystolithiasis": {
            "complaint": "right upper quadrant colic after fatty meals",
            "illness": "two similar episodes in the past year",
            "exam": "positive Murphy sign",
            "lab": "",
            "imaging": "ultrasound: echogenic gallbladder stones with acoustic shadow",
            "pathology": "",
        },
        "Acute appendicitis": {
            "complaint": "periumbilical pain migrating to the right lower abdomen",
            "illness": "onset 18 hours ago with nausea",
            "exam": "McBurney point tenderness with rebound",
            "lab": "WBC 14.2 x10^9/L (elevated); CRP 56 mg/L (elevated)",
            "imaging": "CT: dilated appendix with periappendiceal fat stranding",
            "pathology": "",
        },
        "Intestinal obstruction": {
            "complaint": "abdominal distension and vomiting",
            "illness": "no flatus for two days",
            "exam": "high-pitched bowel sounds",
            "lab": "potassium 3.1 mmol/L (low)",
            "imaging": "abdominal X-ray: multiple air-fluid levels",
            "pathology": "",
        },
        "Type 2 diabetes mellitus": {
            "complaint": "thirst and polyuria",
            "illness": "diagnosed five years ago, on metformin",
            "exam": "",
            "lab": "fasting glucose 9.8 mmol/L (elevated); HbA1c 8.1% (elevated)",
            "imaging": "",
            "pathology": "",
        },
        "Hypertension": {
            "complaint": "occasional dizziness",
            "illness": "long-standing high blood pressure",
            "exam": "blood pressure 162/98 mmHg",
            "lab": "",
            "imaging": "",
            "pathology": "",
        },
    },
    "thyroid surgery": {
        "Papillary thyroid carcinoma": {
            "complaint": "neck mass found on physical examination",
            "illness": "no hoarseness or dysphagia",
            "exam": "firm 1.5 cm nodule in the right thyroid lobe",
            "lab": "thyroglobulin 68 ng/mL (elevated)",
            "imaging": "ultrasound: hypoechoic nodule with microcalcifications, TI-RADS 5",
            "pathology": "fine-needle aspiration: papillary carcinoma, Bethesda VI",
        },
        "Nodular goiter": {
            "complaint": "slowly enlarging neck",
            "illness": "swelling noted for several years",
            "exam": "diffusely enlarged multinodular thyroid",
            "lab": "TSH 1.9 mIU/L (normal)",
            "imaging": "ultrasound: multiple mixed cystic-solid thyroid nodules",
            "pathology": "",
        },
        "Hashimoto thyroiditis": {
            "complaint": "fatigue and cold intolerance",
            "illness": "weight gain of 4 kg in six months",
            "exam": "firm, non-tender goiter",
            "lab": "anti-TPO 560 IU/mL (elevated); TSH 8.7 mIU/L (elevated)",
            "imaging": "ultrasound: heterogeneous hypoechoic thyroid parenchyma",
            "pathology": "",
        },
        "Graves disease": {
            "complaint": "palpitations and heat intolerance",
            "illness": "weight loss despite good appetite",
            "exam": "fine tremor, diffuse goiter with bruit",
            "lab": "free T4 42 pmol/L (elevated); TSH <0.01 mIU/L (low); TRAb positive",
            "imaging": "ultrasound: diffusely increased thyroid vascularity",
            "pathology": "",
        },
        "Thyroid adenoma": {
            "complaint": "solitary neck lump",
            "illness": "painless, noticed incidentally",
            "exam": "smooth mobile 2 cm thyroid nodule",
            "lab": "thyroid function normal",
            "imaging": "ultrasound: well-circumscribed isoechoic nodule with halo",
            "pathology": "lobectomy specimen: follicular adenoma",
        },
        "Hypothyroidism": {
            "complaint": "lethargy",
            "illness": "constipation and dry skin",
            "exam": "slow relaxation of ankle reflexes",
            "lab": "TSH 14.2 mIU/L (elevated); free T4 7 pmol/L (low)",
            "imaging": "",
            "pathology": "",
        },
        "Hyperlipidemia": {
            "complaint": "",
            "illness": "found on routine screening",
            "exam": "",
            "lab": "LDL-C 4.6 mmol/L (elevated); triglycerides 2.9 mmol/L (elevated)",
            "imaging": "",
            "pathology": "",
        },
        "Type 2 diabetes mellitus": {
            "complaint": "increased thirst",
            "illness": "on oral hypoglycemics",
            "exam": "",
            "lab": "HbA1c 7.6% (elevated)",
            "imaging": "",
            "pathology": "",
        },
    },
}
