/** The 80 annotatable object classes grouped into 11 superclasses. */

export const SUPERCLASSES: Record<string, string[]> = {
  person: ["person"],
  vehicle: ["bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat"],
  outdoor: ["traffic light", "fire hydrant", "stop sign", "parking meter", "bench"],
  animal: ["bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe"],
  accessory: ["backpack", "umbrella", "handbag", "tie", "suitcase"],
  sports: [
    "frisbee", "skis", "snowboard", "sports ball", "kite", "baseball bat",
    "baseball glove", "skateboard", "surfboard", "tennis racket",
  ],
  kitchen: ["bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl"],
  food: [
    "banana", "apple", "sandwich", "orange", "broccoli", "carrot", "hot dog",
    "pizza", "donut", "cake",
  ],
  furniture: ["chair", "couch", "potted plant", "bed", "dining table", "toilet"],
  electronic: ["tv", "laptop", "mouse", "remote", "keyboard", "cell phone"],
  appliance: [
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock",
    "vase", "scissors", "teddy bear", "hair drier", "toothbrush",
  ],
};

export const SUPERCLASS_NAMES = Object.keys(SUPERCLASSES);

export const ALL_CLASSES = SUPERCLASS_NAMES.flatMap((s) => SUPERCLASSES[s]);
