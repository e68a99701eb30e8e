#![allow(dead_code)]

pub mod oracle;

use faqsearch_core::evalkit::Qrels;
use faqsearch_core::{FaqDoc, Query};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EXAMPLE_QUERIES: [&str; 16] = [
    "Is there a minimum square footage requirement for a home to be eligible for FHA financing?",
    "What's the maximum DTI ratio for a conventional loan?",
    "Is manual underwriting allowed?",
    "Can we originate a loan for a home on the market?",
    "Do I need to collect reserves for a second home?",
    "Can I give loan to a non US Citizen?",
    "Can I give loan to a customer who has late payments?",
    "Customer has a judgement, can I do the loan?",
    "Can I do past-due, collection, and charge-off of non-mortgage accounts?",
    "Customer pays alimony/child support, does that count against the DTI?",
    "Customer only has 9 payments left on their car. Can I exclude it?",
    "Customer has student loan, but the credit report says zero for payment?",
    "What do I do with open accounts? Amex",
    "He's seasonally employed, can I use that income?",
    "She is starting a new job, what documents do I need?",
    "Customer has foreign income. Can we use that?",
];

pub fn example_queries() -> Vec<Query> {
    EXAMPLE_QUERIES
        .iter()
        .enumerate()
        .map(|(i, t)| Query::new(format!("q{:02}", i + 1), *t))
        .collect()
}

/// Twelve hand-written FAQ pairs with overlapping vocabulary and one
/// unanswered question.
pub fn synthetic_12() -> Vec<FaqDoc> {
    let rows = [
        ("faq-01", "What are the FHA loan limits for a single family home?", "FHA loan limits depend on the county and the number of units in the home."),
        ("faq-02", "Is manual underwriting allowed for FHA loans?", "Manual underwriting is allowed when the automated system returns a refer and the borrower has compensating factors."),
        ("faq-03", "What is the maximum DTI ratio for a conventional loan?", "The maximum debt to income ratio for a conventional loan is 50 percent with strong compensating factors."),
        ("faq-04", "Do I need reserves for a second home purchase?", "Two months of reserves are required for a second home; more for investment property."),
        ("faq-05", "Can a property be refinanced if it is currently listed for sale?", "The listing must be cancelled before the refinance loan closes."),
        ("faq-06", "Can a non US citizen get a mortgage?", "Permanent and non permanent resident aliens are eligible with proper documentation."),
        ("faq-07", "How are late payments on the credit report treated?", "Recent late mortgage payments may require a manual underwriting review."),
        ("faq-08", "How do I handle a judgement against the borrower?", "Judgements must be paid off or on a payment plan before closing."),
        ("faq-09", "Does alimony or child support count against DTI?", "Alimony and child support payments are included in the monthly debt for the DTI ratio."),
        ("faq-10", "Can I exclude a car loan with few payments left?", "Installment debts with ten or fewer payments remaining may be excluded from DTI."),
        ("faq-11", "What income documents are needed for a new job?", "An offer letter and a first paystub are needed when the borrower is starting a new job."),
        ("faq-12", "Can foreign income be used to qualify?", ""),
    ];
    rows.iter().map(|(id, q, a)| FaqDoc::new(*id, *q, *a)).collect()
}

const FILLER: &[&str] = &[
    "loan",
    "mortgage",
    "borrower",
    "lender",
    "rate",
    "term",
    "escrow",
    "title",
    "closing",
    "appraisal",
    "property",
    "home",
    "credit",
    "income",
    "debt",
    "payment",
    "insurance",
    "tax",
    "equity",
    "refinance",
    "purchase",
    "condo",
    "occupancy",
    "gift",
    "funds",
    "asset",
    "employment",
    "verification",
    "disclosure",
    "fee",
    "points",
    "lock",
    "program",
    "guideline",
    "eligible",
    "requirement",
    "document",
    "report",
    "score",
    "history",
    "county",
    "limit",
    "value",
    "ratio",
    "reserve",
    "account",
    "balance",
    "statement",
    "bank",
    "deposit",
];

fn sentence(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    (0..len).map(|_| FILLER.choose(rng).unwrap().to_string()).collect()
}

/// A corpus of `n` generated FAQ pairs plus graded judgments for the
/// sixteen frequent queries. For each query, two documents reuse the
/// query's own words in the question (grade 2) and two more in the answer
/// only (grade 1); a handful of filler documents are judged 0.
pub fn synthetic_large(n: usize, seed: u64) -> (Vec<FaqDoc>, Vec<Query>, Qrels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries = example_queries();
    let mut docs = Vec::with_capacity(n);
    let mut qrels = Qrels::default();
    let mut next = 0usize;
    let mut push = |docs: &mut Vec<FaqDoc>, q: String, a: String| {
        let id = format!("doc-{next:04}");
        next += 1;
        docs.push(FaqDoc::new(id.clone(), q, a));
        id
    };
    for query in &queries {
        let words: Vec<String> = faqsearch_core::tokenize(&query.text).into_tokens();
        for (grade, in_question) in [(2u8, true), (2, true), (1, false), (1, false)] {
            let mut picked: Vec<String> = words.choose_multiple(&mut rng, words.len().min(5)).cloned().collect();
            let mut filler = sentence(&mut rng, 4);
            let (q, a) = if in_question {
                picked.append(&mut filler);
                (picked.join(" "), sentence(&mut rng, 30).join(" "))
            } else {
                let mut answer = sentence(&mut rng, 25);
                answer.append(&mut picked);
                (filler.join(" "), answer.join(" "))
            };
            let id = push(&mut docs, q, a);
            qrels.insert(&query.id, &id, grade).unwrap();
        }
    }
    while docs.len() < n {
        let qlen = rng.gen_range(5..12);
        let alen = rng.gen_range(0..60);
        let q = sentence(&mut rng, qlen).join(" ");
        let a = sentence(&mut rng, alen).join(" ");
        push(&mut docs, q, a);
    }
    for query in &queries {
        for _ in 0..6 {
            let d = &docs[rng.gen_range(queries.len() * 4..docs.len())];
            let _ = qrels.insert(&query.id, &d.id, 0);
        }
    }
    docs.shuffle(&mut rng);
    (docs, queries, qrels)
}
