#!/usr/bin/env python3
"""Fine-tune and run a Hugging Face sequence classifier for sexism-alert.

train   --base DIR --train FILE --out DIR --summary FILE --epochs N --lr X
        --batch-size N --max-length N --seed N --weight-sexist W --weight-not-sexist W
predict --model DIR --input FILE --output FILE --max-length N

Class index 1 is "sexist", index 0 "not_sexist". Scores are the softmax
probability of index 1.
"""

import argparse
import json
import random
import sys

import numpy as np
import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

SEXIST = 1
NOT_SEXIST = 0


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def train(args):
    seed_everything(args.seed)
    records = read_jsonl(args.train)
    texts = [r["text"] for r in records]
    labels = [SEXIST if r["label"] == "sexist" else NOT_SEXIST for r in records]

    tokenizer = AutoTokenizer.from_pretrained(args.base)
    model = AutoModelForSequenceClassification.from_pretrained(
        args.base,
        num_labels=2,
        id2label={NOT_SEXIST: "not_sexist", SEXIST: "sexist"},
        label2id={"not_sexist": NOT_SEXIST, "sexist": SEXIST},
        ignore_mismatched_sizes=True,
    )
    weights = torch.zeros(2)
    weights[SEXIST] = args.weight_sexist
    weights[NOT_SEXIST] = args.weight_not_sexist
    loss_fn = torch.nn.CrossEntropyLoss(weight=weights)
    optimizer = torch.optim.AdamW(model.parameters(), lr=args.lr)
    generator = torch.Generator().manual_seed(args.seed)

    epochs = []
    for epoch in range(1, args.epochs + 1):
        model.train()
        order = torch.randperm(len(texts), generator=generator).tolist()
        total_loss = 0.0
        correct = 0
        for start in range(0, len(order), args.batch_size):
            idx = order[start : start + args.batch_size]
            batch = tokenizer(
                [texts[i] for i in idx],
                truncation=True,
                max_length=args.max_length,
                padding=True,
                return_tensors="pt",
            )
            target = torch.tensor([labels[i] for i in idx])
            logits = model(**batch).logits
            loss = loss_fn(logits, target)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(idx)
            correct += (logits.argmax(dim=-1) == target).sum().item()
        epochs.append(
            {
                "epoch": epoch,
                "train_loss": total_loss / len(texts),
                "train_accuracy": correct / len(texts),
            }
        )

    model.save_pretrained(args.out)
    tokenizer.save_pretrained(args.out)
    with open(args.summary, "w", encoding="utf-8") as f:
        json.dump({"epochs": epochs}, f)


def predict(args):
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModelForSequenceClassification.from_pretrained(args.model)
    model.eval()
    texts = [r["text"] for r in read_jsonl(args.input)]
    with open(args.output, "w", encoding="utf-8") as out, torch.no_grad():
        for start in range(0, len(texts), 32):
            chunk = texts[start : start + 32]
            full = tokenizer(chunk, truncation=False)["input_ids"]
            batch = tokenizer(
                chunk,
                truncation=True,
                max_length=args.max_length,
                padding=True,
                return_tensors="pt",
            )
            probs = torch.softmax(model(**batch).logits, dim=-1)[:, SEXIST]
            for ids, p in zip(full, probs.tolist()):
                out.write(
                    json.dumps({"score": p, "truncated": len(ids) > args.max_length}) + "\n"
                )


def main(argv):
    parser = argparse.ArgumentParser()
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train")
    t.add_argument("--base", required=True)
    t.add_argument("--train", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--summary", required=True)
    t.add_argument("--epochs", type=int, default=3)
    t.add_argument("--lr", type=float, default=2e-5)
    t.add_argument("--batch-size", type=int, default=16)
    t.add_argument("--max-length", type=int, default=128)
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--weight-sexist", type=float, default=1.0)
    t.add_argument("--weight-not-sexist", type=float, default=1.0)

    p = sub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-length", type=int, default=128)

    args = parser.parse_args(argv)
    if args.command == "train":
        train(args)
    else:
        predict(args)


if __name__ == "__main__":
    main(sys.argv[1:])
