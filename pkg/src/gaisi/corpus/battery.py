"""Default task battery, category set, and UK SOC 2010 sub-major groups.

The battery is the default 44-item inventory of generic work activities
grouped into 12 categories. Callers may supply their own tasks.csv; the
category labels below are the closed set accepted by the loader.
"""

CATEGORIES = (
    "Manual Skills",
    "Reading",
    "Writing",
    "Numeracy",
    "Planning and Organising",
    "Expertise and Innovation",
    "Problem Analysis",
    "Professional Communication",
    "Client Interaction",
    "Collaboration",
    "Emotion and Impression Management",
    "Management",
)

# (task_id, category, prompt-ready wording)
DEFAULT_BATTERY = (
    ("manual_heavy", "Manual Skills", "Carrying, pushing or pulling heavy objects"),
    ("manual_stamina", "Manual Skills", "Working for long periods on physical activities"),
    ("manual_repair", "Manual Skills", "Mending, repairing, assembling, constructing or adjusting things"),
    ("manual_tools", "Manual Skills", "Knowing how to use or operate tools, equipment or machinery"),
    ("read_forms", "Reading", "Reading written information such as forms, notices or signs"),
    ("read_short", "Reading", "Reading short reports, letters or emails"),
    ("read_long", "Reading", "Reading long reports, manuals, articles or books"),
    ("write_forms", "Writing", "Filling in forms or writing notices"),
    ("write_short", "Writing", "Writing short documents such as letters or emails"),
    ("write_long", "Writing", "Writing long documents with correct spelling and grammar"),
    ("num_basic", "Numeracy", "Carrying out basic arithmetic such as adding and subtracting"),
    ("num_fractions", "Numeracy", "Working with decimals, percentages or fractions"),
    ("num_advanced", "Numeracy", "Using advanced mathematical or statistical procedures"),
    ("plan_own", "Planning and Organising", "Planning your own work activities"),
    ("plan_others", "Planning and Organising", "Planning the work activities of other people"),
    ("plan_time", "Planning and Organising", "Organising your own time and working to deadlines"),
    ("plan_ahead", "Planning and Organising", "Thinking ahead about upcoming jobs or problems"),
    ("plan_develop", "Planning and Organising", "Developing detailed plans for future work"),
    ("exp_specialist", "Expertise and Innovation", "Drawing on specialist knowledge or understanding"),
    ("exp_update", "Expertise and Innovation", "Keeping up to date with new developments in your area of work"),
    ("exp_processes", "Expertise and Innovation", "Developing improved ways of working or new processes"),
    ("exp_products", "Expertise and Innovation", "Helping to develop improved products or services"),
    ("prob_spot", "Problem Analysis", "Spotting problems or faults"),
    ("prob_cause", "Problem Analysis", "Working out the cause of problems or faults"),
    ("prob_solve", "Problem Analysis", "Thinking of practical solutions to problems"),
    ("prob_complex", "Problem Analysis", "Analysing complex problems in depth"),
    ("comm_instruct", "Professional Communication", "Instructing, training or teaching people"),
    ("comm_present", "Professional Communication", "Making speeches or presentations"),
    ("comm_persuade", "Professional Communication", "Persuading or influencing other people"),
    ("client_people", "Client Interaction", "Dealing with people as part of the job"),
    ("client_care", "Client Interaction", "Counselling, advising or caring for customers or clients"),
    ("client_sell", "Client Interaction", "Selling a product or a service"),
    ("client_knowledge", "Client Interaction", "Using knowledge of particular products or services"),
    ("collab_team", "Collaboration", "Working together with a team of people"),
    ("collab_listen", "Collaboration", "Listening carefully to colleagues"),
    ("collab_cooperate", "Collaboration", "Cooperating and coordinating with co-workers"),
    ("emo_own", "Emotion and Impression Management", "Managing your own feelings at work"),
    ("emo_others", "Emotion and Impression Management", "Handling the feelings of other people"),
    ("emo_appearance", "Emotion and Impression Management", "Looking or sounding the part for the job"),
    ("mgmt_motivate", "Management", "Motivating the staff whose work you supervise"),
    ("mgmt_resources", "Management", "Keeping control of resources or budgets"),
    ("mgmt_coach", "Management", "Coaching staff in how to do their jobs"),
    ("mgmt_careers", "Management", "Helping staff to develop their careers"),
    ("mgmt_strategy", "Management", "Making strategic decisions about future direction"),
)

assert len(DEFAULT_BATTERY) == 44
assert {c for _, c, _ in DEFAULT_BATTERY} == set(CATEGORIES)

# UK SOC 2010 sub-major (2-digit) groups.
SOC2010_SUBMAJOR = (
    ("11", "Corporate Managers and Directors"),
    ("12", "Other Managers and Proprietors"),
    ("21", "Science, Research, Engineering and Technology Professionals"),
    ("22", "Health Professionals"),
    ("23", "Teaching and Educational Professionals"),
    ("24", "Business, Media and Public Service Professionals"),
    ("31", "Science, Engineering and Technology Associate Professionals"),
    ("32", "Health and Social Care Associate Professionals"),
    ("33", "Protective Service Occupations"),
    ("34", "Culture, Media and Sports Occupations"),
    ("35", "Business and Public Service Associate Professionals"),
    ("41", "Administrative Occupations"),
    ("42", "Secretarial and Related Occupations"),
    ("51", "Skilled Agricultural and Related Trades"),
    ("52", "Skilled Metal, Electrical and Electronic Trades"),
    ("53", "Skilled Construction and Building Trades"),
    ("54", "Textiles, Printing and Other Skilled Trades"),
    ("61", "Caring Personal Service Occupations"),
    ("62", "Leisure, Travel and Related Personal Service Occupations"),
    ("71", "Sales Occupations"),
    ("72", "Customer Service Occupations"),
    ("81", "Process, Plant and Machine Operatives"),
    ("82", "Transport and Mobile Machine Drivers and Operatives"),
    ("91", "Elementary Trades and Related Occupations"),
    ("92", "Elementary Administration and Service Occupations"),
)

# Occupation skill levels by 2-digit SOC 2010 group.
SKILL_LEVELS = {
    "High": ("11", "21", "22", "23", "24", "31"),
    "Mid-High": ("12", "32", "33", "34", "35", "41", "42"),
    "Mid-Low": ("52", "54", "61", "62", "72"),
    "Low": ("51", "53", "71", "81", "82", "91", "92"),
}

SKILL_LEVEL_BY_OCC2 = {occ: level for level, occs in SKILL_LEVELS.items() for occ in occs}


def skill_level(occ_code):
    """Skill level for an occupation code, by its 2-digit prefix; None if unknown."""
    return SKILL_LEVEL_BY_OCC2.get(str(occ_code)[:2])
