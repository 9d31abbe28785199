"""Writes the 20-sample evaluation fixtures and their replay transcripts.

Every replayed response is correct except the (method, k, sample) cells listed
in WRONG below, so each aggregate is a hand count: accuracy = 1 - |wrong| / 20.
Run from this directory; the outputs are committed.
"""
import json

METHODS = ["globenc", "decompx", "random"]
KS = [100, 80, 50]

# sample indices (0-based) answered wrongly, per task/method/k
WRONG = {
    "cls": {
        ("globenc", 80): [3], ("globenc", 50): [3, 8, 14],
        ("decompx", 80): [3, 11], ("decompx", 50): [1, 3, 11, 17],
        ("random", 80): [3, 7, 15], ("random", 50): [0, 3, 7, 9, 15, 19],
    },
    "qa": {
        ("globenc", 80): [2], ("globenc", 50): [2, 5, 9, 13],
        ("decompx", 80): [2, 6], ("decompx", 50): [2, 6, 10],
        ("random", 80): [4, 12], ("random", 50): [1, 4, 8, 12, 16],
    },
    "rsn": {
        ("globenc", 80): [0, 4, 9, 12, 18], ("globenc", 50): [0, 2, 4, 6, 9, 12, 15, 18],
        ("decompx", 80): [4, 12], ("decompx", 50): [1, 4, 7, 12, 13, 19],
        ("random", 80): [1, 4, 6, 9, 12, 17], ("random", 50): [0, 1, 3, 4, 6, 9, 11, 12, 14, 17],
    },
}

REVIEWS = [
    ("The movie was good, and I liked it very much.", "positive"),
    ("A dull and lifeless film with a plot that goes nowhere.", "negative"),
    ("The acting was wonderful and the story kept me engaged until the very end.", "positive"),
    ("I was bored the whole time and the ending made no sense at all.", "negative"),
    ("A beautiful film with a moving score and great performances from the whole cast.", "positive"),
    ("The dialogue was awful and the characters were flat and boring.", "negative"),
    ("One of the best films I have seen this year, funny and smart.", "positive"),
    ("Terrible pacing, weak script, and the worst acting I have seen in years.", "negative"),
    ("I loved the direction and the photography was simply stunning.", "positive"),
    ("The story was predictable and the jokes were not funny.", "negative"),
    ("A charming and warm film that the whole family will enjoy.", "positive"),
    ("I wanted to leave after twenty minutes; it was a waste of time.", "negative"),
    ("Great performances and a clever plot make this film worth watching.", "positive"),
    ("The effects looked cheap and the story was a complete mess.", "negative"),
    ("An excellent film with strong writing and a great ending.", "positive"),
    ("Poorly written, badly acted, and far too long.", "negative"),
    ("The cast is great and the music is beautiful; I would watch it again.", "positive"),
    ("A boring film with nothing new to say and no real characters.", "negative"),
    ("Funny, moving, and smart, this is a film I will remember.", "positive"),
    ("The plot was silly and the acting was bad from start to finish.", "negative"),
]

ARTICLES = [
    ("The city council approved a new budget on Monday that increases funding for public schools and road repairs. The plan adds two million dollars for schools and one million for roads. Council members said the money will come from higher property taxes. Some residents said the tax increase is too high, but most members voted for the plan.",
     "The city council approved a budget that raises school and road funding through higher property taxes."),
    ("A storm brought heavy rain and strong winds to the coast on Tuesday, closing schools and cutting power to thousands of homes. Officials said crews were working to restore power and clear fallen trees. No injuries were reported, and the storm is expected to move north by Wednesday.",
     "A coastal storm closed schools and cut power to thousands of homes, but no injuries were reported."),
    ("The local football team won the championship on Sunday after a close game that ended three to two. The winning goal came in the final minute of the game. Thousands of fans filled the streets of the city to celebrate the first title for the team in twenty years.",
     "The local football team won its first championship in twenty years with a late goal."),
    ("Scientists at the state university said they have found a new species of frog in the northern forest. The small green frog was found near a river during a study of local wildlife. The team said the forest needs protection because the frog lives in only a small area.",
     "University scientists found a new frog species in the northern forest and called for its protection."),
    ("The new hospital opened its doors on Friday after three years of construction. The hospital has two hundred beds and a large emergency room. Health officials said the hospital will reduce waiting times for patients across the region.",
     "A new two hundred bed hospital opened and is expected to cut patient waiting times."),
    ("Prices at grocery stores rose again last month, with the cost of bread, milk and eggs going up the most. Economists said higher fuel costs and poor weather caused the increase. Families said they are spending more on food and cutting back on other things.",
     "Grocery prices rose again due to fuel costs and poor weather, pushing families to cut spending."),
    ("The airport will add a new terminal next year to handle the growing number of travelers. The project will cost five hundred million dollars and create hundreds of jobs. Airport officials said the terminal will open in two years.",
     "The airport will build a new terminal costing five hundred million dollars to handle more travelers."),
    ("A fire destroyed an old warehouse near the river on Thursday night. Firefighters worked for six hours to control the fire. The building was empty and no one was hurt. Officials are still looking for the cause of the fire.",
     "A fire destroyed an empty warehouse near the river and its cause is under investigation."),
    ("The school board voted to start classes later in the morning next year. The board said students will get more sleep and do better in school. Some parents said the change will make it hard for them to get to work on time.",
     "The school board voted to start classes later so students get more sleep, despite parent concerns."),
    ("A popular music festival returned to the park this weekend after two years away. More than fifty thousand people came to see the bands. Local businesses said the festival brought many new customers to the city.",
     "A music festival returned to the park, drawing fifty thousand people and helping local businesses."),
    ("The government announced a plan to plant one million trees over the next five years. The trees will be planted in cities and along highways. Officials said the plan will clean the air and cool the streets during the summer.",
     "The government plans to plant one million trees in five years to clean the air and cool cities."),
    ("A new bridge over the river opened to traffic on Saturday. The bridge replaces an old one that was closed last year because it was not safe. Drivers said the new bridge will cut their travel time by half.",
     "A new bridge replaced an unsafe one and will halve drivers' travel time."),
    ("The technology company said it will hire two thousand workers at a new office in the city. The company makes software for hospitals and banks. The mayor said the new jobs are good news for the local economy.",
     "A technology company will hire two thousand workers at a new city office."),
    ("Heavy snow closed the mountain highway for two days this week. Trucks and cars were stuck on the road until crews cleared the snow. Officials asked drivers to avoid travel during storms.",
     "Heavy snow closed the mountain highway for two days, stranding trucks and cars."),
    ("The museum opened a new exhibit of ancient art from around the world. The exhibit includes more than three hundred pieces, some of them two thousand years old. The museum expects many visitors this summer.",
     "The museum opened an exhibit of more than three hundred pieces of ancient art."),
    ("Police arrested two men after a bank robbery in the center of the city on Monday. The men took money from the bank and drove away, but officers stopped their car an hour later. No one was injured.",
     "Police arrested two men an hour after a bank robbery in the city center."),
    ("The national park will close some trails this month to protect nesting birds. Park officials said the birds need quiet during the nesting season. The trails will open again in the autumn.",
     "The national park is closing some trails to protect nesting birds until the autumn."),
    ("A local bakery won a national award for the best bread in the country. The owners said they use old family recipes and bake every morning before sunrise. Customers now wait in long lines outside the shop.",
     "A local bakery using family recipes won a national award for the best bread."),
    ("The state will spend more money on public buses next year to reduce traffic. The plan adds new routes and more buses during busy hours. Officials hope more people will leave their cars at home.",
     "The state will expand public bus service to reduce traffic."),
    ("A heat wave pushed temperatures above forty degrees across the region this week. Officials opened cooling centers and asked people to drink water and stay inside. Hospitals reported more patients with heat illness.",
     "A heat wave above forty degrees led officials to open cooling centers as heat illness rose."),
]

QA = [
    ("Tom forgot his umbrella at home. When he left the office, it was raining hard.", "What probably happened to Tom?", ["He stayed dry", "He got wet on the way home", "He bought a car", "He went to sleep"], 1),
    ("Anna studied every night for two weeks before the exam.", "Why did Anna study so much?", ["She wanted to do well on the exam", "She was bored", "She had no homework", "She wanted to sleep"], 0),
    ("The store was closed when Mark arrived, so he went home without milk.", "What did Mark want to buy?", ["Bread", "Shoes", "Milk", "A book"], 2),
    ("Lisa planted seeds in the spring and watered them every day.", "What will likely happen in the summer?", ["The seeds will be gone", "The garden will have plants", "It will snow", "Lisa will move"], 1),
    ("The baby started to cry, so her father picked her up and gave her a bottle.", "Why did the father give the baby a bottle?", ["He thought she was hungry", "He was hungry", "She wanted to play", "It was bedtime for him"], 0),
    ("Sam missed the bus and had to walk to school in the rain.", "How did Sam likely feel when he arrived?", ["Dry and happy", "Wet and tired", "Sleepy and warm", "Excited about the bus"], 1),
    ("The dog barked loudly when the mail carrier came to the door.", "Why did the dog bark?", ["It was hungry", "It heard someone at the door", "It was asleep", "It saw a cat on TV"], 1),
    ("Maria practiced the piano for months before the concert.", "What was Maria preparing for?", ["A test", "A trip", "A concert", "A race"], 2),
    ("The ice cream melted quickly because it was a very hot day.", "Why did the ice cream melt?", ["It was cold", "It was a hot day", "It was old", "It was eaten"], 1),
    ("John lost his keys, so he could not open his front door.", "What problem did John have?", ["He could not get into his house", "He lost his job", "He missed a meal", "He forgot a name"], 0),
    ("The team trained hard all season and won the final game.", "What helped the team win?", ["Bad weather", "Hard training", "Luck only", "A new stadium"], 1),
    ("Emma felt sick, so she stayed home from work and rested.", "Why did Emma stay home?", ["She was on vacation", "She felt sick", "It was a holiday", "Her car broke"], 1),
    ("The lights went out during the storm and the house became dark.", "What caused the lights to go out?", ["The storm", "A party", "The sun", "A new lamp"], 0),
    ("Ben saved money for a year to buy a new bike.", "What did Ben want?", ["A car", "A new bike", "A house", "A phone"], 1),
    ("The road was icy, so the driver slowed down.", "Why did the driver slow down?", ["He was late", "The road was icy", "He saw a friend", "The car was new"], 1),
    ("Kate smiled when she opened the gift from her grandmother.", "How did Kate feel about the gift?", ["Angry", "Sad", "Happy", "Scared"], 2),
    ("The students were quiet because the teacher was giving a test.", "Why were the students quiet?", ["They were asleep", "There was a test", "They were at home", "The teacher left"], 1),
    ("Paul ate a large lunch, so he was not hungry at dinner.", "Why was Paul not hungry at dinner?", ["He ate a large lunch", "He was sick", "Dinner was cold", "He forgot to cook"], 0),
    ("The plants in the garden died because no one watered them.", "What did the plants need?", ["More shade", "Water", "Music", "New pots"], 1),
    ("Nina wore a heavy coat because it was snowing outside.", "Why did Nina wear a heavy coat?", ["It was snowing", "It was hot", "It was raining", "It was new"], 0),
]

PROBLEMS = [
    ("Sara has 12 apples and gives 4 to her friend. How many apples does she have left?", 8),
    ("A book costs 15 dollars. How much do 3 books cost?", 45),
    ("Tom runs 5 miles every day. How many miles does he run in a week?", 35),
    ("There are 24 students in a class split into 4 equal groups. How many students are in each group?", 6),
    ("A farmer has 18 cows and buys 7 more. How many cows does he have now?", 25),
    ("Lily reads 20 pages a day. How many pages does she read in 9 days?", 180),
    ("A pizza has 8 slices. If 3 friends eat 2 slices each, how many slices are left?", 2),
    ("John earns 12 dollars an hour and works 40 hours. How much does he earn?", 480),
    ("A box holds 6 eggs. How many boxes are needed for 54 eggs?", 9),
    ("Mia had 50 dollars and spent 32 dollars on a game. How much money does she have left?", 18),
    ("A train travels 60 miles per hour for 3 hours. How far does it travel?", 180),
    ("There are 7 days in a week. How many days are in 12 weeks?", 84),
    ("A shop sold 125 shirts on Monday and 175 on Tuesday. How many shirts did it sell in total?", 300),
    ("Ben has 3 bags with 14 marbles in each bag. How many marbles does he have?", 42),
    ("A garden has 5 rows of 11 plants. How many plants are in the garden?", 55),
    ("Kate bought 4 notebooks at 2.5 dollars each. How much did she spend?", 10),
    ("A tank holds 1,200 liters and is half full. How many liters are in the tank?", 600),
    ("Sam scored 17 points in the first game and 26 in the second. How many points did he score?", 43),
    ("A class collected 90 cans over 5 days, the same number each day. How many cans per day?", 18),
    ("A bus has 48 seats and 19 are empty. How many seats are taken?", 29),
]


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def replay(task, ids, right, wrong, usage=None):
    out = []
    for i, sid in enumerate(ids):
        for m in METHODS:
            for k in KS:
                bad = i in WRONG.get(task, {}).get((m, k), [])
                rec = {"id": sid, "method": m, "k": k, "response": wrong(i) if bad else right(i)}
                if usage:
                    rec.update(usage(i, k))
                out.append(rec)
    return out


def main():
    ids = [f"cls-{i:02d}" for i in range(20)]
    write_jsonl("cls.jsonl", [{"id": s, "text": t, "label": l} for s, (t, l) in zip(ids, REVIEWS)])
    flip = {"positive": "negative", "negative": "positive"}
    write_jsonl("cls_replay.jsonl", replay(
        "cls", ids,
        lambda i: REVIEWS[i][1].capitalize() + ".",
        lambda i: flip[REVIEWS[i][1]],
        usage=lambda i, k: {"input_tokens": 40 + len(REVIEWS[i][0].split()) * k // 100, "output_tokens": 1}))

    ids = [f"sum-{i:02d}" for i in range(20)]
    write_jsonl("sum.jsonl", [{"id": s, "document": d, "reference": r} for s, (d, r) in zip(ids, ARTICLES)])
    recs = []
    for i, sid in enumerate(ids):
        for m in METHODS:
            for k in KS:
                ref = ARTICLES[i][1]
                words = ref.split()
                # Full prompts reproduce the reference; shorter ones drop the tail.
                keep = max(3, len(words) * k // 100)
                recs.append({"id": sid, "method": m, "k": k, "response": " ".join(words[:keep])})
    write_jsonl("sum_replay.jsonl", recs)

    ids = [f"qa-{i:02d}" for i in range(20)]
    write_jsonl("qa.jsonl", [{"id": s, "context": c, "question": q, "choices": ch, "answer_index": a}
                             for s, (c, q, ch, a) in zip(ids, QA)])
    letters = "ABCD"
    write_jsonl("qa_replay.jsonl", replay(
        "qa", ids,
        lambda i: letters[QA[i][3]],
        lambda i: "Answer: " + letters[(QA[i][3] + 1) % 4]))

    ids = [f"rsn-{i:02d}" for i in range(20)]
    write_jsonl("rsn.jsonl", [{"id": s, "problem": p, "answer_number": a} for s, (p, a) in zip(ids, PROBLEMS)])
    write_jsonl("rsn_replay.jsonl", replay(
        "rsn", ids,
        lambda i: f"Working through the numbers step by step.\n#### {PROBLEMS[i][1]:,}",
        lambda i: f"I think it is about {PROBLEMS[i][1] + 3}.\n#### {PROBLEMS[i][1] + 3}"))


if __name__ == "__main__":
    main()
